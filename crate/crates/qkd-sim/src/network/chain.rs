//! Base-station-mediated key sharing (protocol A) and its relay-chain
//! generalization.
//!
//! In a single cell the base station sources one random symbol sequence and
//! sends the same bits and bases to both clients over their fibers; each
//! client measures in random bases, announces them, and the base station
//! announces where all three agreed. Across a chain, each intermediate base
//! station measures in a random basis and re-prepares what it read, so a
//! position survives sifting only when every party guessed the same basis:
//! the sifted fraction falls as 2^-(n+1) for n base stations. Distillation
//! then runs between the clients only.
//!
//! The base stations learn every sifted bit — they sourced or measured them
//! all — and the transcript records that trust assumption explicitly.

use rand::Rng;

use crate::adversary::InterceptResendConfig;
use crate::bb84::session::{distill, DistillProgress, DistillationConfig};
use crate::bb84::{measure_one, prepare_sequence, Basis, KeyMaterial, KeyStage, QubitSymbol};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::transcript::{
    ClassificationTally, NetworkTranscript, RelayKnowledge, StageLengths, TRANSCRIPT_SCHEMA_VERSION,
};

use super::classify_bases;
use super::route::route;
use super::topology::{NodeId, NodeKind, Topology};
use super::BasisAgreement;

const CHUNK: u64 = 1 << 20;

/// Shared knobs for network protocol runs.
#[derive(Debug, Clone)]
pub struct NetworkRunConfig {
    pub n_pulses: u64,
    pub distillation: DistillationConfig,
    /// When false the run stops after sifting.
    pub distill: bool,
}

impl Default for NetworkRunConfig {
    fn default() -> Self {
        NetworkRunConfig {
            n_pulses: 100_000,
            distillation: DistillationConfig::default(),
            distill: true,
        }
    }
}

/// One fiber hop: channel plus optional tap.
#[derive(Debug, Clone)]
pub struct LinkSpec {
    pub channel: ChannelParams,
    pub adversary: Option<InterceptResendConfig>,
}

impl LinkSpec {
    pub fn clean(channel: ChannelParams) -> Self {
        LinkSpec {
            channel,
            adversary: None,
        }
    }
}

/// Channel-level description of a chain run, independent of any topology.
///
/// `source_to_a` is the fiber from the preparing node to endpoint A; `None`
/// means the preparer *is* endpoint A (the plain two-party boundary case).
/// `hops` lead from the preparer to endpoint B, with a measure-and-reprepare
/// relay between consecutive entries; `hops.len() - 1` relays in total.
#[derive(Debug, Clone)]
pub struct ChainChannels {
    pub source_to_a: Option<LinkSpec>,
    pub hops: Vec<LinkSpec>,
}

impl ChainChannels {
    /// Number of basis-choosing parties beyond the preparer.
    fn independent_matchers(&self) -> u32 {
        self.hops.len() as u32 + self.source_to_a.is_some() as u32
    }

    pub fn expected_sifted_fraction(&self) -> f64 {
        0.5f64.powi(self.independent_matchers() as i32)
    }
}

/// Result of a network protocol run.
#[derive(Debug, Clone)]
pub struct ChainOutcome {
    pub sifted_keys: (KeyMaterial, KeyMaterial),
    pub final_keys: Option<(KeyMaterial, KeyMaterial)>,
    pub transcript: NetworkTranscript,
}

impl ChainOutcome {
    pub fn is_aborted(&self) -> bool {
        self.transcript.aborted.is_some()
    }
}

/// Labels attached to a chain run for its transcript.
#[derive(Debug, Clone)]
struct ChainLabels {
    kind: &'static str,
    endpoints: [String; 2],
    route: Vec<String>,
    classify: bool,
}

/// Three-party sharing inside one cell: the cell's base station sources the
/// sequence for both clients.
pub fn protocol_a(
    topology: &Topology,
    qnc1: &NodeId,
    qnc2: &NodeId,
    cfg: &NetworkRunConfig,
    rng: &mut SimRng,
) -> Result<ChainOutcome> {
    let (n1, n2) = (topology.node(qnc1)?, topology.node(qnc2)?);
    if n1.kind != NodeKind::Qnc || n2.kind != NodeKind::Qnc {
        return Err(Error::InvalidParams(format!(
            "{qnc1} and {qnc2} must both be clients"
        )));
    }
    if qnc1 == qnc2 {
        return Err(Error::InvalidParams(
            "the two clients must be distinct".to_string(),
        ));
    }
    if n1.cell != n2.cell {
        return Err(Error::InvalidParams(format!(
            "{qnc1} and {qnc2} are in different cells; use protocol_a_chain or protocol_b"
        )));
    }
    let qbs = topology.qbs_of_cell(&n1.cell)?.clone();
    let a_link = topology.quantum_link(&qbs, qnc1)?;
    let b_link = topology.quantum_link(&qbs, qnc2)?;
    let channels = ChainChannels {
        source_to_a: Some(LinkSpec {
            channel: a_link.channel.clone(),
            adversary: a_link.adversary,
        }),
        hops: vec![LinkSpec {
            channel: b_link.channel.clone(),
            adversary: b_link.adversary,
        }],
    };
    let labels = ChainLabels {
        kind: "protocol_a",
        endpoints: [qnc1.to_string(), qnc2.to_string()],
        route: vec![qbs.to_string()],
        classify: true,
    };
    run_chain(&channels, labels, cfg, rng)
}

/// Protocol A generalized across a chain of `n_qbs` base stations: the first
/// sources the sequence, the rest measure and re-prepare.
pub fn protocol_a_chain(
    topology: &Topology,
    qnc1: &NodeId,
    qnc2: &NodeId,
    n_qbs: usize,
    cfg: &NetworkRunConfig,
    rng: &mut SimRng,
) -> Result<ChainOutcome> {
    if n_qbs == 0 {
        return Err(Error::InvalidParams(
            "n_qbs = 0 is the plain two-party run; use run_relay_chain with no relay hops"
                .to_string(),
        ));
    }
    let (n1, n2) = (topology.node(qnc1)?, topology.node(qnc2)?);
    if n1.kind != NodeKind::Qnc || n2.kind != NodeKind::Qnc {
        return Err(Error::InvalidParams(format!(
            "{qnc1} and {qnc2} must both be clients"
        )));
    }
    let path = route(topology, &n1.cell, &n2.cell)?;
    if path.len() != n_qbs {
        return Err(Error::InvalidParams(format!(
            "the routed path crosses {} base stations, expected {n_qbs}",
            path.len()
        )));
    }
    let a_link = topology.quantum_link(&path[0], qnc1)?;
    let mut hops = Vec::with_capacity(path.len());
    for pair in path.windows(2) {
        let link = topology.quantum_link(&pair[0], &pair[1])?;
        hops.push(LinkSpec {
            channel: link.channel.clone(),
            adversary: link.adversary,
        });
    }
    let last_link = topology.quantum_link(path.last().expect("path non-empty"), qnc2)?;
    hops.push(LinkSpec {
        channel: last_link.channel.clone(),
        adversary: last_link.adversary,
    });
    let channels = ChainChannels {
        source_to_a: Some(LinkSpec {
            channel: a_link.channel.clone(),
            adversary: a_link.adversary,
        }),
        hops,
    };
    let labels = ChainLabels {
        kind: "protocol_a_chain",
        endpoints: [qnc1.to_string(), qnc2.to_string()],
        route: path.iter().map(|n| n.to_string()).collect(),
        classify: path.len() == 1,
    };
    run_chain(&channels, labels, cfg, rng)
}

/// Chain run over explicit channels, without a topology. Covers the
/// boundary cases a topology cannot express, in particular the plain
/// two-party run (`source_to_a = None`, one hop).
pub fn run_relay_chain(
    channels: &ChainChannels,
    cfg: &NetworkRunConfig,
    rng: &mut SimRng,
) -> Result<ChainOutcome> {
    let relays = channels.hops.len().saturating_sub(1);
    let route: Vec<String> = if channels.source_to_a.is_some() {
        (0..=relays).map(|i| format!("relay-{}", i + 1)).collect()
    } else {
        (0..relays).map(|i| format!("relay-{}", i + 1)).collect()
    };
    let labels = ChainLabels {
        kind: "protocol_a_chain",
        endpoints: ["endpoint-a".to_string(), "endpoint-b".to_string()],
        route,
        classify: false,
    };
    run_chain(channels, labels, cfg, rng)
}

fn run_chain(
    channels: &ChainChannels,
    labels: ChainLabels,
    cfg: &NetworkRunConfig,
    rng: &mut SimRng,
) -> Result<ChainOutcome> {
    if channels.hops.is_empty() {
        return Err(Error::InvalidParams(
            "a chain needs at least one hop toward endpoint B".to_string(),
        ));
    }
    if cfg.n_pulses == 0 {
        return Err(Error::EmptySequence);
    }
    for link in channels.source_to_a.iter().chain(channels.hops.iter()) {
        link.channel.validate()?;
        if let Some(adv) = &link.adversary {
            adv.validate()?;
        }
    }

    let session_id = labels.kind.to_string();
    let mut bits_a = Vec::new();
    let mut bits_b = Vec::new();
    let mut detected: u64 = 0;
    let mut tally = ClassificationTally::default();

    let mut remaining = cfg.n_pulses;
    while remaining > 0 {
        let chunk = remaining.min(CHUNK) as usize;
        remaining -= chunk as u64;
        let prepared = prepare_sequence(chunk, rng)?;

        // endpoint A measures the source's pulses directly, unless the
        // source is endpoint A itself
        let side_a: Option<Vec<crate::bb84::Measurement>> = match &channels.source_to_a {
            Some(link) => Some(transmit(&prepared, link, rng)),
            None => None,
        };

        // the other copy runs the relay gauntlet toward endpoint B
        let mut stream: Vec<Option<QubitSymbol>> = prepared.iter().map(|&s| Some(s)).collect();
        let mut relay_bases: Vec<Vec<Basis>> = Vec::with_capacity(channels.hops.len() - 1);
        let mut relay_alive: Vec<Vec<bool>> = Vec::with_capacity(channels.hops.len() - 1);
        for link in &channels.hops[..channels.hops.len() - 1] {
            let mut bases = Vec::with_capacity(chunk);
            let mut alive = Vec::with_capacity(chunk);
            for slot in stream.iter_mut() {
                let meas = measure_slot(*slot, link, rng);
                bases.push(meas.basis);
                alive.push(meas.detected());
                *slot = meas.outcome.map(|bit| QubitSymbol {
                    bit,
                    basis: meas.basis,
                });
            }
            relay_bases.push(bases);
            relay_alive.push(alive);
        }
        let last = channels.hops.last().expect("non-empty");
        let side_b: Vec<crate::bb84::Measurement> = stream
            .iter()
            .map(|slot| measure_slot(*slot, last, rng))
            .collect();

        for i in 0..chunk {
            let prep = prepared[i];
            let (a_basis, a_bit, a_alive) = match &side_a {
                Some(ms) => (ms[i].basis, ms[i].outcome, ms[i].detected()),
                None => (prep.basis, Some(prep.bit), true),
            };
            let b_alive = side_b[i].detected();
            let relays_alive = relay_alive.iter().all(|alive| alive[i]);
            if !(a_alive && b_alive && relays_alive) {
                continue;
            }
            detected += 1;
            if labels.classify {
                match classify_bases(a_basis, prep.basis, side_b[i].basis) {
                    BasisAgreement::SecretKey => tally.secret_key += 1,
                    BasisAgreement::PartialSecretKey => tally.partial_secret_key += 1,
                    BasisAgreement::NoSecretKey => tally.no_secret_key += 1,
                }
            }
            let all_agree = a_basis == prep.basis
                && side_b[i].basis == prep.basis
                && relay_bases.iter().all(|bases| bases[i] == prep.basis);
            if all_agree {
                bits_a.push(a_bit.expect("alive position has an outcome"));
                bits_b.push(side_b[i].outcome.expect("alive position has an outcome"));
            }
        }
    }

    let key_a = KeyMaterial::new(KeyStage::Sifted, bits_a, &session_id);
    let key_b = KeyMaterial::new(KeyStage::Sifted, bits_b, &session_id);
    let sifted_len = key_a.len() as u64;

    let relay_knowledge = labels
        .route
        .iter()
        .map(|node| RelayKnowledge {
            node: node.clone(),
            // the source invented every bit and each relay measured in the
            // agreeing basis on every kept position
            sifted_fraction_known: 1.0,
        })
        .collect();

    let mut transcript = NetworkTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        kind: labels.kind.to_string(),
        endpoints: labels.endpoints,
        route: labels.route,
        n_qbs: if channels.source_to_a.is_some() {
            channels.hops.len() as u32
        } else {
            channels.hops.len() as u32 - 1
        },
        pulses_sent: cfg.n_pulses,
        detected,
        stage_lengths: StageLengths {
            raw: cfg.n_pulses,
            sifted: sifted_len,
            corrected: 0,
            final_len: 0,
        },
        sifted_fraction: if detected > 0 {
            sifted_len as f64 / detected as f64
        } else {
            0.0
        },
        expected_sifted_fraction: channels.expected_sifted_fraction(),
        measured_qber: None,
        leaked_bits: 0,
        amplification_seed: None,
        distilled: false,
        classification: labels.classify.then_some(tally),
        relay_knowledge,
        hops: Vec::new(),
        aborted: None,
    };

    if !cfg.distill {
        transcript.stage_lengths.validate()?;
        return Ok(ChainOutcome {
            sifted_keys: (key_a, key_b),
            final_keys: None,
            transcript,
        });
    }

    let mut progress = DistillProgress::default();
    let distilled = distill(&key_a, &key_b, &cfg.distillation, rng, &mut progress);
    transcript.measured_qber = progress.measured_qber;
    transcript.leaked_bits = progress.leaked_bits;
    transcript.amplification_seed = progress.amplification_seed;
    transcript.stage_lengths.corrected = progress.corrected_len;
    transcript.stage_lengths.final_len = progress.final_len;
    transcript.distilled = progress.distilled;
    match distilled {
        Ok(keys) => {
            transcript.stage_lengths.validate()?;
            Ok(ChainOutcome {
                sifted_keys: (key_a, key_b),
                final_keys: Some(keys),
                transcript,
            })
        }
        Err(e) if e.is_protocol_abort() => {
            transcript.aborted = Some(e.to_string());
            transcript.stage_lengths.validate()?;
            Ok(ChainOutcome {
                sifted_keys: (key_a, key_b),
                final_keys: None,
                transcript,
            })
        }
        Err(e) => Err(e),
    }
}

/// Sends prepared symbols across one link (tap, then channel).
fn transmit(
    symbols: &[QubitSymbol],
    link: &LinkSpec,
    rng: &mut SimRng,
) -> Vec<crate::bb84::Measurement> {
    symbols
        .iter()
        .map(|&sym| measure_slot(Some(sym), link, rng))
        .collect()
}

/// One position through one link; `None` is a vacuum slot left behind by an
/// upstream relay that lost the pulse.
fn measure_slot(
    slot: Option<QubitSymbol>,
    link: &LinkSpec,
    rng: &mut SimRng,
) -> crate::bb84::Measurement {
    let mut sym = slot;
    if let (Some(s), Some(adv)) = (sym, &link.adversary) {
        if adv.intercept_fraction > 0.0 && rng.gen_bool(adv.intercept_fraction) {
            let basis = Basis::random(rng);
            let bit = if basis == s.basis {
                s.bit
            } else {
                rng.gen::<bool>()
            };
            sym = Some(QubitSymbol { bit, basis });
        }
    }
    measure_one(sym, &link.channel, rng)
}
