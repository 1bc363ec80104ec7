//! Config-driven experiments and their result artifacts.
//!
//! An experiment is described by a versioned TOML file: a mode, a seed, a
//! channel (or topology), and per-mode parameters. [`run`] executes it and
//! renders a result artifact in CSV or JSON with frozen column order and key
//! names, echoing every input so artifacts stand alone. All randomness
//! derives from the config seed; sweep point `i` uses the derived stream
//! `derive_seed(seed, i)`, so re-running a config reproduces the artifact
//! byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::InterceptResendConfig;
use crate::bb84::session::{run_session, DistillationConfig, SessionConfig};
use crate::channel::{ChannelParams, DEFAULT_ALPHA_DB_PER_KM};
use crate::network::{
    protocol_a, protocol_a_chain, protocol_b, run_relay_chain, ChainChannels, LinkSpec,
    NetworkRunConfig, RelayConfig, Topology,
};
use crate::rng::derive_rng;
use crate::transcript::{NetworkTranscript, SessionTranscript};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Errors from the experiment front end, split by exit code: config
/// problems (exit 2), protocol errors (exit 3 when they are aborts), and
/// I/O (exit 4).
#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] crate::error::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    LinkBudget,
    Bb84,
    ProtocolA,
    ProtocolAChain,
    ProtocolB,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::LinkBudget => "link_budget",
            Mode::Bb84 => "bb84",
            Mode::ProtocolA => "protocol_a",
            Mode::ProtocolAChain => "protocol_a_chain",
            Mode::ProtocolB => "protocol_b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// Channel description as written in config files. Loss is either given
/// directly (`loss_db`) or derived from `alpha_db_per_km * length_km +
/// excess_db`; length sweeps always use the attenuation form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub mu: f64,
    pub nu_hz: f64,
    #[serde(default = "default_q_factor")]
    pub q_factor: f64,
    pub eta_d: f64,
    #[serde(default)]
    pub p_dark: f64,
    #[serde(default)]
    pub e_optical: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_db_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_db: Option<f64>,
}

fn default_q_factor() -> f64 {
    0.5
}

impl ChannelConfig {
    pub fn to_params(&self) -> Result<ChannelParams, RunError> {
        let length_km = self.length_km.unwrap_or(0.0);
        let loss_db = match self.loss_db {
            Some(db) => db,
            None => {
                self.alpha_db_per_km.unwrap_or(DEFAULT_ALPHA_DB_PER_KM) * length_km
                    + self.excess_db.unwrap_or(0.0)
            }
        };
        let params = ChannelParams {
            mu: self.mu,
            nu_hz: self.nu_hz,
            q_factor: self.q_factor,
            loss_db,
            length_km,
            eta_d: self.eta_d,
            p_dark: self.p_dark,
            e_optical: self.e_optical,
        };
        params
            .validate()
            .map_err(|e| RunError::Config(format!("[channel] {e}")))?;
        Ok(params)
    }

    /// Channel at a swept fiber length; loss follows the attenuation model.
    pub fn at_length(&self, length_km: f64) -> Result<ChannelParams, RunError> {
        let rebased = ChannelConfig {
            loss_db: None,
            length_km: Some(length_km),
            ..self.clone()
        };
        rebased.to_params()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetSection {
    /// Fiber lengths to sweep; defaults to the configured channel length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths_km: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bb84Section {
    pub n_pulses: u64,
    #[serde(default = "default_sample_fraction")]
    pub sample_fraction: f64,
    #[serde(default = "default_security_margin")]
    pub security_margin: usize,
    #[serde(default = "default_abort_threshold")]
    pub abort_threshold: f64,
    #[serde(default = "default_cascade_passes")]
    pub cascade_passes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept_fraction: Option<f64>,
    #[serde(default = "default_true")]
    pub distill: bool,
    #[serde(default)]
    pub record_detail: bool,
}

fn default_sample_fraction() -> f64 {
    DistillationConfig::default().sample_fraction
}
fn default_security_margin() -> usize {
    DistillationConfig::default().security_margin
}
fn default_abort_threshold() -> f64 {
    DistillationConfig::default().abort_threshold
}
fn default_cascade_passes() -> usize {
    DistillationConfig::default().cascade_passes
}
fn default_true() -> bool {
    true
}
fn default_qnc1() -> String {
    "alice".to_string()
}
fn default_qnc2() -> String {
    "bob".to_string()
}

impl Bb84Section {
    fn distillation(&self) -> DistillationConfig {
        DistillationConfig {
            sample_fraction: self.sample_fraction,
            security_margin: self.security_margin,
            abort_threshold: self.abort_threshold,
            cascade_passes: self.cascade_passes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolASection {
    pub n_pulses: u64,
    #[serde(default = "default_qnc1")]
    pub qnc1: String,
    #[serde(default = "default_qnc2")]
    pub qnc2: String,
    #[serde(default = "default_true")]
    pub distill: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolAChainSection {
    pub n_pulses: u64,
    /// Chain lengths to sweep; 0 is the plain two-party boundary case.
    pub n_qbs: Vec<u32>,
    #[serde(default)]
    pub distill: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolBSection {
    pub n_pulses: u64,
    /// Chain lengths to sweep when the topology is generated.
    #[serde(default = "default_n_qbs_one")]
    pub n_qbs: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub setup_pulses_per_link: Option<u64>,
    #[serde(default = "default_qnc1")]
    pub qnc1: String,
    #[serde(default = "default_qnc2")]
    pub qnc2: String,
    #[serde(default = "default_true")]
    pub distill: bool,
}

fn default_n_qbs_one() -> Vec<u32> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    /// Topology description file, resolved relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mode: Mode,
    /// Root seed; required so no run is silently nondeterministic.
    pub seed: u64,
    #[serde(default)]
    pub output_format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_budget: Option<LinkBudgetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bb84: Option<Bb84Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_a: Option<ProtocolASection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_a_chain: Option<ProtocolAChainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_b: Option<ProtocolBSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySection>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        if config.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Mode-required sections must be present.
    pub fn validate(&self) -> Result<(), RunError> {
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(RunError::Config(format!(
                    "mode {} requires {what}",
                    self.mode.name()
                )))
            }
        };
        match self.mode {
            Mode::LinkBudget => need(self.channel.is_some(), "a [channel] section")?,
            Mode::Bb84 => {
                need(self.channel.is_some(), "a [channel] section")?;
                need(self.bb84.is_some(), "a [bb84] section")?;
            }
            Mode::ProtocolA => {
                need(self.protocol_a.is_some(), "a [protocol_a] section")?;
                need(
                    self.channel.is_some() || self.topology_file().is_some(),
                    "a [channel] section or a [topology] file",
                )?;
            }
            Mode::ProtocolAChain => {
                need(
                    self.protocol_a_chain.is_some(),
                    "a [protocol_a_chain] section",
                )?;
                need(self.channel.is_some(), "a [channel] section")?;
            }
            Mode::ProtocolB => {
                need(self.protocol_b.is_some(), "a [protocol_b] section")?;
                need(
                    self.channel.is_some() || self.topology_file().is_some(),
                    "a [channel] section or a [topology] file",
                )?;
            }
        }
        Ok(())
    }

    fn topology_file(&self) -> Option<&PathBuf> {
        self.topology.as_ref().and_then(|t| t.file.as_ref())
    }
}

// --- result artifacts -----------------------------------------------------

/// A rendered experiment result plus its outcome summary.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub format: OutputFormat,
    pub text: String,
    /// True when any run in the artifact aborted (distinct exit code).
    pub any_aborted: bool,
}

#[derive(Serialize)]
struct JsonArtifact<'a> {
    schema_version: u32,
    mode: &'static str,
    seed: u64,
    config: &'a ExperimentConfig,
    rows: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    transcripts: Vec<serde_json::Value>,
}

#[derive(Serialize)]
struct LinkBudgetRow {
    length_km: f64,
    loss_db: f64,
    eta_t: f64,
    r_raw_hz: f64,
    expected_sifted_qber: f64,
}

#[derive(Serialize)]
struct Bb84Row {
    pulses_sent: u64,
    detected: u64,
    sifted: u64,
    corrected: u64,
    #[serde(rename = "final")]
    final_len: u64,
    sifted_fraction: f64,
    measured_qber: Option<f64>,
    leaked_bits: u64,
    aborted: Option<String>,
}

#[derive(Serialize)]
struct ProtocolARow {
    pulses_sent: u64,
    detected: u64,
    sifted: u64,
    corrected: u64,
    #[serde(rename = "final")]
    final_len: u64,
    sifted_fraction: f64,
    secret_triples: u64,
    partial_triples: u64,
    no_key_triples: u64,
    measured_qber: Option<f64>,
    leaked_bits: u64,
    aborted: Option<String>,
}

#[derive(Serialize)]
struct ChainRow {
    n_qbs: u32,
    pulses_sent: u64,
    detected: u64,
    sifted: u64,
    sifted_fraction: f64,
    expected_fraction: f64,
    #[serde(rename = "final")]
    final_len: u64,
    aborted: Option<String>,
}

#[derive(Serialize)]
struct ProtocolBRow {
    n_qbs: u32,
    pulses_sent: u64,
    detected: u64,
    sifted: u64,
    sifted_fraction: f64,
    #[serde(rename = "final")]
    final_len: u64,
    keys_match: Option<bool>,
    otp_balanced: bool,
    pad_drawn_bits: u64,
    measured_qber: Option<f64>,
    leaked_bits: u64,
    aborted: Option<String>,
}

/// Frozen CSV headers per mode (documented in the README).
pub fn csv_header(mode: Mode) -> &'static str {
    match mode {
        Mode::LinkBudget => "length_km,loss_db,eta_t,r_raw_hz,expected_sifted_qber",
        Mode::Bb84 => {
            "pulses_sent,detected,sifted,corrected,final,sifted_fraction,measured_qber,leaked_bits,aborted"
        }
        Mode::ProtocolA => {
            "pulses_sent,detected,sifted,corrected,final,sifted_fraction,secret_triples,partial_triples,no_key_triples,measured_qber,leaked_bits,aborted"
        }
        Mode::ProtocolAChain => {
            "n_qbs,pulses_sent,detected,sifted,sifted_fraction,expected_fraction,final,aborted"
        }
        Mode::ProtocolB => {
            "n_qbs,pulses_sent,detected,sifted,sifted_fraction,final,keys_match,otp_balanced,pad_drawn_bits,measured_qber,leaked_bits,aborted"
        }
    }
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Abort reasons may not carry the CSV separator.
fn fmt_abort(v: &Option<String>) -> String {
    v.as_deref().unwrap_or("").replace(',', ";")
}

/// Executes a validated config. `base_dir` anchors relative topology paths.
pub fn run(config: &ExperimentConfig, base_dir: &Path) -> Result<Artifact, RunError> {
    config.validate()?;
    let mut rows: Vec<serde_json::Value> = Vec::new();
    let mut csv_lines: Vec<String> = vec![csv_header(config.mode).to_string()];
    let mut transcripts: Vec<serde_json::Value> = Vec::new();
    let mut any_aborted = false;

    match config.mode {
        Mode::LinkBudget => {
            let section = config.link_budget.clone().unwrap_or_default();
            let channel = config.channel.as_ref().expect("validated");
            let lengths = match &section.lengths_km {
                Some(lengths) => lengths.clone(),
                None => vec![channel.length_km.unwrap_or(0.0)],
            };
            for (i, &length) in lengths.iter().enumerate() {
                // a sweep re-derives loss from attenuation; a single point
                // honors an explicit loss_db
                let params = if section.lengths_km.is_none() {
                    channel.to_params()?
                } else {
                    channel.at_length(length)?
                };
                let row = LinkBudgetRow {
                    length_km: params.length_km,
                    loss_db: params.loss_db,
                    eta_t: params.transmittance(),
                    r_raw_hz: params.raw_key_rate(),
                    expected_sifted_qber: params.expected_sifted_qber(),
                };
                csv_lines.push(format!(
                    "{},{},{},{},{}",
                    row.length_km, row.loss_db, row.eta_t, row.r_raw_hz, row.expected_sifted_qber
                ));
                rows.push(serde_json::to_value(&row).expect("row serializes"));
                let _ = i;
            }
        }
        Mode::Bb84 => {
            let section = config.bb84.as_ref().expect("validated");
            let channel = config.channel.as_ref().expect("validated").to_params()?;
            let adversary = match section.intercept_fraction {
                Some(f) => Some(InterceptResendConfig::new(f)?),
                None => None,
            };
            let session_cfg = SessionConfig {
                n_pulses: section.n_pulses,
                distillation: section.distillation(),
                adversary,
                distill: section.distill,
                record_detail: section.record_detail,
                session_id: format!("bb84-seed{}", config.seed),
            };
            let mut rng = derive_rng(config.seed, 0);
            let outcome = run_session(&channel, &session_cfg, &mut rng)?;
            let t = &outcome.transcript;
            any_aborted |= t.aborted.is_some();
            let row = Bb84Row {
                pulses_sent: t.pulses_sent,
                detected: t.detected,
                sifted: t.stage_lengths.sifted,
                corrected: t.stage_lengths.corrected,
                final_len: t.stage_lengths.final_len,
                sifted_fraction: t.sifted_fraction,
                measured_qber: t.measured_qber,
                leaked_bits: t.leaked_bits,
                aborted: t.aborted.clone(),
            };
            csv_lines.push(format!(
                "{},{},{},{},{},{},{},{},{}",
                row.pulses_sent,
                row.detected,
                row.sifted,
                row.corrected,
                row.final_len,
                row.sifted_fraction,
                fmt_opt_f64(row.measured_qber),
                row.leaked_bits,
                fmt_abort(&row.aborted)
            ));
            rows.push(serde_json::to_value(&row).expect("row serializes"));
            transcripts.push(session_transcript_value(t));
        }
        Mode::ProtocolA => {
            let section = config.protocol_a.as_ref().expect("validated");
            let topology = self::topology_for(config, base_dir)?;
            let cfg = NetworkRunConfig {
                n_pulses: section.n_pulses,
                distillation: DistillationConfig::default(),
                distill: section.distill,
            };
            let mut rng = derive_rng(config.seed, 0);
            let outcome = protocol_a(
                &topology,
                &section.qnc1.as_str().into(),
                &section.qnc2.as_str().into(),
                &cfg,
                &mut rng,
            )?;
            let t = &outcome.transcript;
            any_aborted |= t.aborted.is_some();
            let tally = t.classification.unwrap_or_default();
            let row = ProtocolARow {
                pulses_sent: t.pulses_sent,
                detected: t.detected,
                sifted: t.stage_lengths.sifted,
                corrected: t.stage_lengths.corrected,
                final_len: t.stage_lengths.final_len,
                sifted_fraction: t.sifted_fraction,
                secret_triples: tally.secret_key,
                partial_triples: tally.partial_secret_key,
                no_key_triples: tally.no_secret_key,
                measured_qber: t.measured_qber,
                leaked_bits: t.leaked_bits,
                aborted: t.aborted.clone(),
            };
            csv_lines.push(format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                row.pulses_sent,
                row.detected,
                row.sifted,
                row.corrected,
                row.final_len,
                row.sifted_fraction,
                row.secret_triples,
                row.partial_triples,
                row.no_key_triples,
                fmt_opt_f64(row.measured_qber),
                row.leaked_bits,
                fmt_abort(&row.aborted)
            ));
            rows.push(serde_json::to_value(&row).expect("row serializes"));
            transcripts.push(network_transcript_value(t));
        }
        Mode::ProtocolAChain => {
            let section = config.protocol_a_chain.as_ref().expect("validated");
            let channel = config.channel.as_ref().expect("validated").to_params()?;
            for (i, &n_qbs) in section.n_qbs.iter().enumerate() {
                let cfg = NetworkRunConfig {
                    n_pulses: section.n_pulses,
                    distillation: DistillationConfig::default(),
                    distill: section.distill,
                };
                let mut rng = derive_rng(config.seed, i as u64);
                let outcome = if n_qbs == 0 {
                    let channels = ChainChannels {
                        source_to_a: None,
                        hops: vec![LinkSpec::clean(channel.clone())],
                    };
                    run_relay_chain(&channels, &cfg, &mut rng)?
                } else {
                    let topology = Topology::linear_chain(n_qbs as usize, channel.clone());
                    protocol_a_chain(
                        &topology,
                        &"alice".into(),
                        &"bob".into(),
                        n_qbs as usize,
                        &cfg,
                        &mut rng,
                    )?
                };
                let t = &outcome.transcript;
                any_aborted |= t.aborted.is_some();
                let row = ChainRow {
                    n_qbs,
                    pulses_sent: t.pulses_sent,
                    detected: t.detected,
                    sifted: t.stage_lengths.sifted,
                    sifted_fraction: t.sifted_fraction,
                    expected_fraction: t.expected_sifted_fraction,
                    final_len: t.stage_lengths.final_len,
                    aborted: t.aborted.clone(),
                };
                csv_lines.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    row.n_qbs,
                    row.pulses_sent,
                    row.detected,
                    row.sifted,
                    row.sifted_fraction,
                    row.expected_fraction,
                    row.final_len,
                    fmt_abort(&row.aborted)
                ));
                rows.push(serde_json::to_value(&row).expect("row serializes"));
                transcripts.push(network_transcript_value(t));
            }
        }
        Mode::ProtocolB => {
            let section = config.protocol_b.as_ref().expect("validated");
            let from_file = self::topology_from_file(config, base_dir)?;
            let sweep: Vec<(u32, Topology)> = match from_file {
                Some(topology) => vec![(0, topology)], // route length fills the row
                None => {
                    let channel = config.channel.as_ref().expect("validated").to_params()?;
                    section
                        .n_qbs
                        .iter()
                        .map(|&n| {
                            if n == 0 {
                                Err(RunError::Config(
                                    "[protocol_b] n_qbs must be >= 1".to_string(),
                                ))
                            } else {
                                Ok((n, Topology::linear_chain(n as usize, channel.clone())))
                            }
                        })
                        .collect::<Result<_, _>>()?
                }
            };
            for (i, (_, topology)) in sweep.iter().enumerate() {
                let cfg = RelayConfig {
                    run: NetworkRunConfig {
                        n_pulses: section.n_pulses,
                        distillation: DistillationConfig::default(),
                        distill: section.distill,
                    },
                    setup_pulses_per_link: section.setup_pulses_per_link,
                };
                let mut rng = derive_rng(config.seed, i as u64);
                let outcome = protocol_b(
                    topology,
                    &section.qnc1.as_str().into(),
                    &section.qnc2.as_str().into(),
                    &cfg,
                    &mut rng,
                )?;
                let t = &outcome.transcript;
                any_aborted |= t.aborted.is_some();
                let keys_match = outcome.final_keys.as_ref().map(|(a, b)| a == b);
                let row = ProtocolBRow {
                    n_qbs: t.n_qbs,
                    pulses_sent: t.pulses_sent,
                    detected: t.detected,
                    sifted: t.stage_lengths.sifted,
                    sifted_fraction: t.sifted_fraction,
                    final_len: t.stage_lengths.final_len,
                    keys_match,
                    otp_balanced: t.otp_balanced(),
                    pad_drawn_bits: t.hops.iter().map(|h| h.drawn_bits).sum(),
                    measured_qber: t.measured_qber,
                    leaked_bits: t.leaked_bits,
                    aborted: t.aborted.clone(),
                };
                csv_lines.push(format!(
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    row.n_qbs,
                    row.pulses_sent,
                    row.detected,
                    row.sifted,
                    row.sifted_fraction,
                    row.final_len,
                    fmt_opt_bool(row.keys_match),
                    row.otp_balanced,
                    row.pad_drawn_bits,
                    fmt_opt_f64(row.measured_qber),
                    row.leaked_bits,
                    fmt_abort(&row.aborted)
                ));
                rows.push(serde_json::to_value(&row).expect("row serializes"));
                transcripts.push(network_transcript_value(t));
            }
        }
    }

    let text = match config.output_format {
        OutputFormat::Csv => {
            let mut text = csv_lines.join("\n");
            text.push('\n');
            text
        }
        OutputFormat::Json => {
            let artifact = JsonArtifact {
                schema_version: CONFIG_SCHEMA_VERSION,
                mode: config.mode.name(),
                seed: config.seed,
                config,
                rows,
                transcripts,
            };
            let mut text = serde_json::to_string_pretty(&artifact).expect("artifact serializes");
            text.push('\n');
            text
        }
    };
    Ok(Artifact {
        format: config.output_format,
        text,
        any_aborted,
    })
}

fn session_transcript_value(t: &SessionTranscript) -> serde_json::Value {
    serde_json::to_value(t).expect("transcript serializes")
}

fn network_transcript_value(t: &NetworkTranscript) -> serde_json::Value {
    serde_json::to_value(t).expect("transcript serializes")
}

fn topology_from_file(
    config: &ExperimentConfig,
    base_dir: &Path,
) -> Result<Option<Topology>, RunError> {
    match config.topology.as_ref().and_then(|t| t.file.as_ref()) {
        None => Ok(None),
        Some(file) => {
            let path = if file.is_absolute() {
                file.clone()
            } else {
                base_dir.join(file)
            };
            let text = std::fs::read_to_string(&path).map_err(|e| {
                RunError::Config(format!("cannot read topology {}: {e}", path.display()))
            })?;
            let topology = Topology::from_toml_str(&text)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            Ok(Some(topology))
        }
    }
}

fn topology_for(config: &ExperimentConfig, base_dir: &Path) -> Result<Topology, RunError> {
    match topology_from_file(config, base_dir)? {
        Some(t) => Ok(t),
        None => {
            let channel = config.channel.as_ref().expect("validated").to_params()?;
            Ok(Topology::single_cell(channel))
        }
    }
}
