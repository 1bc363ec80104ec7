//! Multi-hop key relay with one-time-pad masking (protocol B).
//!
//! Adjacent base stations first establish pairwise keys by ordinary BB84
//! over their fibers and bank them. To serve two distant clients, the first
//! base station sources raw material — a sequence of (bit, basis) pairs —
//! sends the corresponding qubits to its local client, and forwards the
//! classical encoding down the chain, masked hop by hop with banked pad.
//! The last base station reconstructs the material exactly and prepares
//! identical qubits for its own client. Sifting and distillation then run
//! between the clients alone, so the final key length is independent of the
//! number of base stations in between.
//!
//! Every base station on the route sees the raw material in the clear;
//! transcripts record that trust assumption per node, along with exact
//! pad accounting per hop.

use crate::bb84::session::{distill, run_session, DistillProgress, SessionConfig};
use crate::bb84::{
    measure_sequence, prepare_sequence, KeyMaterial, KeyStage, Measurement, QubitSymbol,
};
use crate::classical::PublicChannel;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::transcript::{
    HopUsage, NetworkTranscript, RelayKnowledge, StageLengths, TRANSCRIPT_SCHEMA_VERSION,
};

use super::bank::KeyBank;
use super::chain::{ChainOutcome, NetworkRunConfig};
use super::route::route;
use super::topology::{NodeId, NodeKind, Topology};
use super::Basis;

/// Knobs for a relay run, on top of the shared network configuration.
#[derive(Debug, Clone, Default)]
pub struct RelayConfig {
    pub run: NetworkRunConfig,
    /// Pulses each pairwise setup session spends; `None` sizes it
    /// automatically from the link budget with headroom.
    pub setup_pulses_per_link: Option<u64>,
}

/// Encodes raw material as classical bits: bit then basis flag per position.
pub fn encode_symbols(symbols: &[QubitSymbol]) -> Vec<bool> {
    let mut out = Vec::with_capacity(symbols.len() * 2);
    for s in symbols {
        out.push(s.bit);
        out.push(s.basis == Basis::SigmaY);
    }
    out
}

/// Inverse of [`encode_symbols`].
pub fn decode_symbols(bits: &[bool]) -> Result<Vec<QubitSymbol>> {
    if !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "encoded raw material must have even length, got {}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|pair| QubitSymbol {
            bit: pair[0],
            basis: if pair[1] {
                Basis::SigmaY
            } else {
                Basis::SigmaX
            },
        })
        .collect())
}

/// XOR masking; its own inverse. The pad must match the message exactly —
/// one-time-pad discipline leaves nothing over.
pub fn mask(message: &[bool], pad: &[bool]) -> Result<Vec<bool>> {
    if message.len() != pad.len() {
        return Err(Error::ProtocolDesync {
            left: message.len(),
            right: pad.len(),
        });
    }
    Ok(message.iter().zip(pad.iter()).map(|(m, p)| m ^ p).collect())
}

/// Relay-chain key sharing between two clients in (possibly) distant cells.
pub fn protocol_b(
    topology: &Topology,
    qnc1: &NodeId,
    qnc2: &NodeId,
    cfg: &RelayConfig,
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
    let n_pulses = cfg.run.n_pulses;
    if n_pulses == 0 {
        return Err(Error::EmptySequence);
    }
    let path = route(topology, &n1.cell, &n2.cell)?;

    let mut transcript = NetworkTranscript {
        schema_version: TRANSCRIPT_SCHEMA_VERSION,
        kind: "protocol_b".to_string(),
        endpoints: [qnc1.to_string(), qnc2.to_string()],
        route: path.iter().map(|n| n.to_string()).collect(),
        n_qbs: path.len() as u32,
        pulses_sent: n_pulses,
        detected: 0,
        stage_lengths: StageLengths {
            raw: n_pulses,
            sifted: 0,
            corrected: 0,
            final_len: 0,
        },
        sifted_fraction: 0.0,
        expected_sifted_fraction: 0.25,
        measured_qber: None,
        leaked_bits: 0,
        amplification_seed: None,
        distilled: false,
        classification: None,
        relay_knowledge: path
            .iter()
            .map(|node| RelayKnowledge {
                node: node.to_string(),
                // every base station on the route holds the raw material
                sifted_fraction_known: 1.0,
            })
            .collect(),
        hops: Vec::new(),
        aborted: None,
    };
    let empty_keys = || {
        (
            KeyMaterial::new(KeyStage::Sifted, Vec::new(), "protocol_b"),
            KeyMaterial::new(KeyStage::Sifted, Vec::new(), "protocol_b"),
        )
    };

    // setup: pairwise keys between adjacent base stations, banked
    let mut bank = KeyBank::new();
    let needed = (n_pulses * 2) as usize;
    for pair in path.windows(2) {
        let link = topology.quantum_link(&pair[0], &pair[1])?;
        let setup_pulses = match cfg.setup_pulses_per_link {
            Some(p) => p,
            None => auto_setup_pulses(needed, &link.channel, cfg),
        };
        let session_cfg = SessionConfig {
            n_pulses: setup_pulses,
            distillation: cfg.run.distillation,
            adversary: link.adversary,
            distill: true,
            record_detail: false,
            session_id: format!("setup:{}", link.label()),
        };
        let setup = run_session(&link.channel, &session_cfg, rng)?;
        if let Some(reason) = &setup.transcript.aborted {
            transcript.aborted = Some(format!(
                "pairwise setup aborted on {}: {reason}",
                link.label()
            ));
            return Ok(ChainOutcome {
                sifted_keys: empty_keys(),
                final_keys: None,
                transcript,
            });
        }
        let (pairwise, _) = setup.final_keys.expect("non-aborted session distills");
        transcript.hops.push(HopUsage {
            link: link.label(),
            pairwise_key_bits: pairwise.len() as u64,
            drawn_bits: 0,
            masked_message_bits: 0,
            remaining_bits: pairwise.len() as u64,
        });
        bank.deposit(&pair[0], &pair[1], pairwise.bits().to_vec());
    }

    // the first base station sources the raw material and serves its client
    let raw = prepare_sequence(n_pulses as usize, rng)?;
    let link1 = topology.quantum_link(&path[0], qnc1)?;
    let recv1 = measure_with_optional_tap(&raw, link1, rng)?;

    // hop the classical encoding down the chain under one-time-pad masks
    let mut public = PublicChannel::new();
    let mut message = encode_symbols(&raw);
    for (hop_idx, pair) in path.windows(2).enumerate() {
        let pad = match bank.draw(&pair[0], &pair[1], message.len()) {
            Ok(pad) => pad,
            Err(e) => {
                transcript.aborted = Some(e.to_string());
                return Ok(ChainOutcome {
                    sifted_keys: empty_keys(),
                    final_keys: None,
                    transcript,
                });
            }
        };
        let cipher = mask(&message, &pad)?;
        let received = public.relay(&cipher);
        message = mask(&received, &pad)?;
        let hop = &mut transcript.hops[hop_idx];
        hop.drawn_bits = pad.len() as u64;
        hop.masked_message_bits = cipher.len() as u64;
        hop.remaining_bits = bank.available(&pair[0], &pair[1]) as u64;
    }
    let reconstructed = decode_symbols(&message)?;
    debug_assert_eq!(reconstructed, raw);

    // the last base station prepares identical qubits for its client
    let link_n = topology.quantum_link(path.last().expect("non-empty"), qnc2)?;
    let recv_n = measure_with_optional_tap(&reconstructed, link_n, rng)?;

    // each client keeps positions measured in the preparation basis and the
    // clients intersect their kept sets over the classical channel
    let kept1: Vec<bool> = raw
        .iter()
        .zip(recv1.iter())
        .map(|(s, m)| m.detected() && m.basis == s.basis)
        .collect();
    let kept_n: Vec<bool> = reconstructed
        .iter()
        .zip(recv_n.iter())
        .map(|(s, m)| m.detected() && m.basis == s.basis)
        .collect();
    let mut bits_1 = Vec::new();
    let mut bits_n = Vec::new();
    let mut detected_both: u64 = 0;
    for i in 0..n_pulses as usize {
        if recv1[i].detected() && recv_n[i].detected() {
            detected_both += 1;
        }
        if kept1[i] && kept_n[i] {
            bits_1.push(recv1[i].outcome.expect("kept positions clicked"));
            bits_n.push(recv_n[i].outcome.expect("kept positions clicked"));
        }
    }

    let key_1 = KeyMaterial::new(KeyStage::Sifted, bits_1, "protocol_b");
    let key_n = KeyMaterial::new(KeyStage::Sifted, bits_n, "protocol_b");
    transcript.detected = detected_both;
    transcript.stage_lengths.sifted = key_1.len() as u64;
    transcript.sifted_fraction = if detected_both > 0 {
        key_1.len() as f64 / detected_both as f64
    } else {
        0.0
    };

    if !cfg.run.distill {
        transcript.stage_lengths.validate()?;
        return Ok(ChainOutcome {
            sifted_keys: (key_1, key_n),
            final_keys: None,
            transcript,
        });
    }

    let mut progress = DistillProgress::default();
    let distilled = distill(&key_1, &key_n, &cfg.run.distillation, rng, &mut progress);
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
                sifted_keys: (key_1, key_n),
                final_keys: Some(keys),
                transcript,
            })
        }
        Err(e) if e.is_protocol_abort() => {
            transcript.aborted = Some(e.to_string());
            transcript.stage_lengths.validate()?;
            Ok(ChainOutcome {
                sifted_keys: (key_1, key_n),
                final_keys: None,
                transcript,
            })
        }
        Err(e) => Err(e),
    }
}

/// Pulses a setup session needs to bank `needed` pad bits, with headroom for
/// sampling sacrifice, reconciliation leakage and statistical dips.
fn auto_setup_pulses(
    needed: usize,
    channel: &crate::channel::ChannelParams,
    cfg: &RelayConfig,
) -> u64 {
    let click = channel.click_probability();
    let sift = 0.5;
    let sacrifice = 1.0 - cfg.run.distillation.sample_fraction;
    let distill_haircut = 0.85;
    let yield_per_pulse = (click * sift * sacrifice * distill_haircut).max(1e-12);
    ((needed as f64 / yield_per_pulse) * 1.3).ceil() as u64
}

fn measure_with_optional_tap(
    symbols: &[QubitSymbol],
    link: &super::topology::QuantumLink,
    rng: &mut SimRng,
) -> Result<Vec<Measurement>> {
    match &link.adversary {
        Some(adv) => {
            let (resent, _) = crate::adversary::intercept_resend(symbols, adv, rng)?;
            measure_sequence(&resent, &link.channel, rng)
        }
        None => measure_sequence(symbols, &link.channel, rng),
    }
}
