//! End-to-end two-party sessions.
//!
//! `run_session` drives the whole pipeline for one link: preparation,
//! optional eavesdropper, measurement, sifting, sacrificial QBER
//! estimation, reconciliation and amplification. Pulses stream through in
//! chunks, so pulse counts well beyond memory (10^9) are fine; only the
//! sifted material is retained.

use rand::Rng;

use crate::adversary::{intercept_resend, InterceptResendConfig};
use crate::channel::ChannelParams;
use crate::classical::PublicChannel;
use crate::error::{Error, Result};
use crate::rng::{derive_rng, SimRng};
use crate::transcript::{
    EveSummary, SessionDetail, SessionTranscript, StageLengths, TRANSCRIPT_SCHEMA_VERSION,
};

use super::amplify::privacy_amplify;
use super::cascade::{error_correct, CascadeConfig};
use super::{estimate_qber, measure_sequence, prepare_sequence, sift, KeyMaterial, KeyStage};

const CHUNK: u64 = 1 << 20;

/// Distillation stages shared by sessions and network protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistillationConfig {
    /// Fraction of the sifted key sacrificed to estimate the QBER.
    pub sample_fraction: f64,
    /// Fixed subtraction in the final-length formula.
    pub security_margin: usize,
    /// Abort the session above this measured QBER.
    pub abort_threshold: f64,
    /// Reconciliation passes.
    pub cascade_passes: usize,
}

impl Default for DistillationConfig {
    fn default() -> Self {
        DistillationConfig {
            sample_fraction: 0.1,
            security_margin: 30,
            abort_threshold: 0.11,
            cascade_passes: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub n_pulses: u64,
    pub distillation: DistillationConfig,
    /// Eavesdropper inserted on the quantum link.
    pub adversary: Option<InterceptResendConfig>,
    /// When false the session stops after sifting (useful for measuring
    /// channel statistics without paying for distillation).
    pub distill: bool,
    /// Record bases and per-pulse outcomes in the transcript. Only sensible
    /// for small runs; capped to 2^21 pulses.
    pub record_detail: bool,
    pub session_id: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            n_pulses: 100_000,
            distillation: DistillationConfig::default(),
            adversary: None,
            distill: true,
            record_detail: false,
            session_id: "bb84".to_string(),
        }
    }
}

/// Result of one session. `final_keys` is `None` when the run aborted or
/// distillation was switched off; the sifted keys are always available for
/// inspection.
#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub sifted_keys: (KeyMaterial, KeyMaterial),
    pub final_keys: Option<(KeyMaterial, KeyMaterial)>,
    pub transcript: SessionTranscript,
}

impl SessionOutcome {
    pub fn is_aborted(&self) -> bool {
        self.transcript.aborted.is_some()
    }
}

pub fn run_session(
    channel: &ChannelParams,
    config: &SessionConfig,
    rng: &mut SimRng,
) -> Result<SessionOutcome> {
    channel.validate()?;
    if config.n_pulses == 0 {
        return Err(Error::EmptySequence);
    }
    if let Some(adv) = &config.adversary {
        adv.validate()?;
    }
    if config.record_detail && config.n_pulses > (1 << 21) {
        return Err(Error::InvalidParams(
            "record_detail is limited to 2^21 pulses".to_string(),
        ));
    }

    let mut sifted_a: Vec<bool> = Vec::new();
    let mut sifted_b: Vec<bool> = Vec::new();
    let mut detected: u64 = 0;
    let mut attacked: u64 = 0;
    let mut eve_known: u64 = 0;
    let mut detail = config.record_detail.then(|| SessionDetail {
        sent_bases: String::new(),
        received_bases: String::new(),
        outcomes: String::new(),
        kept_positions: Vec::new(),
        sample_positions: Vec::new(),
    });

    let mut remaining = config.n_pulses;
    let mut offset: u64 = 0;
    while remaining > 0 {
        let chunk = remaining.min(CHUNK) as usize;
        remaining -= chunk as u64;

        let sent = prepare_sequence(chunk, rng)?;
        let (wire, taps) = match &config.adversary {
            Some(adv) => {
                let (resent, record) = intercept_resend(&sent, adv, rng)?;
                (resent, Some(record))
            }
            None => (sent.clone(), None),
        };
        let received = measure_sequence(&wire, channel, rng)?;

        detected += received.iter().filter(|m| m.detected()).count() as u64;
        let sifted = sift(&sent, &received, &config.session_id)?;
        if let Some(record) = &taps {
            attacked += record.attacked_count() as u64;
            eve_known += record.known_count(&sent, &sifted.kept_positions) as u64;
        }
        if let Some(d) = detail.as_mut() {
            for (sym, meas) in sent.iter().zip(received.iter()) {
                d.sent_bases.push(sym.basis.label());
                d.received_bases.push(meas.basis.label());
                d.outcomes.push(match meas.outcome {
                    None => '-',
                    Some(false) => '0',
                    Some(true) => '1',
                });
            }
            d.kept_positions
                .extend(sifted.kept_positions.iter().map(|&p| p as u64 + offset));
        }
        sifted_a.extend_from_slice(sifted.key_a.bits());
        sifted_b.extend_from_slice(sifted.key_b.bits());
        offset += chunk as u64;
    }

    let key_a = KeyMaterial::new(KeyStage::Sifted, sifted_a, &config.session_id);
    let key_b = KeyMaterial::new(KeyStage::Sifted, sifted_b, &config.session_id);
    let sifted_len = key_a.len() as u64;

    let eavesdropper = config.adversary.as_ref().map(|adv| EveSummary {
        intercept_fraction: adv.intercept_fraction,
        attacked_pulses: attacked,
        known_sifted_bits: eve_known,
        known_sifted_fraction: if sifted_len > 0 {
            eve_known as f64 / sifted_len as f64
        } else {
            0.0
        },
    });

    let mut transcript = SessionTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        kind: "bb84".to_string(),
        session_id: config.session_id.clone(),
        pulses_sent: config.n_pulses,
        detected,
        stage_lengths: StageLengths {
            raw: config.n_pulses,
            sifted: sifted_len,
            corrected: 0,
            final_len: 0,
        },
        sifted_fraction: if detected > 0 {
            sifted_len as f64 / detected as f64
        } else {
            0.0
        },
        measured_qber: None,
        leaked_bits: 0,
        sample_size: 0,
        amplification_seed: None,
        distilled: false,
        eavesdropper,
        aborted: None,
        detail,
    };

    if !config.distill {
        transcript.stage_lengths.validate()?;
        return Ok(SessionOutcome {
            sifted_keys: (key_a, key_b),
            final_keys: None,
            transcript,
        });
    }

    let mut progress = DistillProgress::default();
    let distilled = distill(&key_a, &key_b, &config.distillation, rng, &mut progress);
    transcript.measured_qber = progress.measured_qber;
    transcript.sample_size = progress.sample_size;
    transcript.leaked_bits = progress.leaked_bits;
    transcript.amplification_seed = progress.amplification_seed;
    transcript.stage_lengths.corrected = progress.corrected_len;
    transcript.stage_lengths.final_len = progress.final_len;
    transcript.distilled = progress.distilled;
    if let Some(d) = transcript.detail.as_mut() {
        d.sample_positions = progress
            .sample_positions
            .iter()
            .map(|&p| p as u64)
            .collect();
    }
    match distilled {
        Ok(keys) => {
            transcript.stage_lengths.validate()?;
            Ok(SessionOutcome {
                sifted_keys: (key_a, key_b),
                final_keys: Some(keys),
                transcript,
            })
        }
        Err(e) if e.is_protocol_abort() => {
            transcript.aborted = Some(e.to_string());
            transcript.stage_lengths.validate()?;
            Ok(SessionOutcome {
                sifted_keys: (key_a, key_b),
                final_keys: None,
                transcript,
            })
        }
        Err(e) => Err(e),
    }
}

/// Bookkeeping filled in as distillation advances, so transcripts keep what
/// happened up to an abort.
#[derive(Debug, Default, Clone)]
pub(crate) struct DistillProgress {
    pub measured_qber: Option<f64>,
    pub sample_size: u64,
    pub sample_positions: Vec<usize>,
    pub leaked_bits: u64,
    pub corrected_len: u64,
    pub final_len: u64,
    pub amplification_seed: Option<u64>,
    pub distilled: bool,
}

/// Estimation, reconciliation and amplification over a sifted key pair.
/// Used by both two-party sessions and the network protocols.
pub(crate) fn distill(
    key_a: &KeyMaterial,
    key_b: &KeyMaterial,
    cfg: &DistillationConfig,
    rng: &mut SimRng,
    progress: &mut DistillProgress,
) -> Result<(KeyMaterial, KeyMaterial)> {
    let estimate = estimate_qber(key_a, key_b, cfg.sample_fraction, rng)?;
    progress.measured_qber = Some(estimate.estimate);
    progress.sample_size = estimate.sample_positions.len() as u64;
    progress.sample_positions = estimate.sample_positions.clone();
    if estimate.estimate > cfg.abort_threshold {
        return Err(Error::QberTooHigh {
            measured: estimate.estimate,
            threshold: cfg.abort_threshold,
        });
    }

    let mut channel = PublicChannel::new();
    let mut cascade_cfg = CascadeConfig::new(estimate.estimate);
    cascade_cfg.passes = cfg.cascade_passes;
    cascade_cfg.abort_threshold = cfg.abort_threshold;
    let corrected = error_correct(
        &estimate.remaining_a,
        &estimate.remaining_b,
        &cascade_cfg,
        &mut channel,
        rng,
    )?;
    progress.leaked_bits = corrected.leaked_bits as u64;
    progress.corrected_len = corrected.key_a.len() as u64;

    let pa_seed = rng.gen::<u64>();
    progress.amplification_seed = Some(pa_seed);
    let final_a = privacy_amplify(
        &corrected.key_a,
        estimate.estimate,
        corrected.leaked_bits,
        cfg.security_margin,
        &mut derive_rng(pa_seed, 0),
    )?;
    let final_b = privacy_amplify(
        &corrected.key_b,
        estimate.estimate,
        corrected.leaked_bits,
        cfg.security_margin,
        &mut derive_rng(pa_seed, 0),
    )?;
    if final_a != final_b {
        return Err(Error::CorrectionFailed {
            passes: corrected.passes_run,
        });
    }
    progress.final_len = final_a.len() as u64;
    progress.distilled = true;
    Ok((final_a, final_b))
}
