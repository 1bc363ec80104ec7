//! The two-party BB84 pipeline.
//!
//! Symbols are prepared in one of two conjugate bases, measured over a
//! simulated channel, sifted on basis agreement, and then distilled into a
//! final key: sacrificial QBER estimation, interactive error correction
//! ([`cascade`]), and privacy amplification ([`amplify`]). [`session`] wires
//! the stages together behind one seeded entry point.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub mod amplify;
pub mod cascade;
pub mod session;

/// One of the two conjugate measurement settings.
///
/// These abstract the interferometric phase encodings of fiber systems
/// (0/π versus π/2·3π/2 on the sender side); only basis agreement matters
/// to the protocol logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    SigmaX,
    SigmaY,
}

impl Basis {
    pub fn random(rng: &mut SimRng) -> Basis {
        if rng.gen::<bool>() {
            Basis::SigmaX
        } else {
            Basis::SigmaY
        }
    }

    /// Single-character label used in transcript detail strings.
    pub fn label(&self) -> char {
        match self {
            Basis::SigmaX => 'x',
            Basis::SigmaY => 'y',
        }
    }
}

/// One prepared qubit: a bit value encoded in a basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSymbol {
    pub bit: bool,
    pub basis: Basis,
}

/// Processing stage of a key. Transitions only move forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyStage {
    Raw,
    Sifted,
    Corrected,
    Final,
}

impl KeyStage {
    pub fn name(&self) -> &'static str {
        match self {
            KeyStage::Raw => "raw",
            KeyStage::Sifted => "sifted",
            KeyStage::Corrected => "corrected",
            KeyStage::Final => "final",
        }
    }
}

/// A staged key: a bit sequence tagged with how far it has been processed
/// and which session produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMaterial {
    bits: Vec<bool>,
    stage: KeyStage,
    origin_session: String,
}

impl KeyMaterial {
    pub fn new(stage: KeyStage, bits: Vec<bool>, origin_session: impl Into<String>) -> Self {
        KeyMaterial {
            bits,
            stage,
            origin_session: origin_session.into(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn stage(&self) -> KeyStage {
        self.stage
    }

    pub fn origin_session(&self) -> &str {
        &self.origin_session
    }

    /// Moves the key to a later (or equal) stage with new content. Stages
    /// never regress and keys never grow across stages.
    pub fn advance(&self, stage: KeyStage, bits: Vec<bool>) -> Result<KeyMaterial> {
        if stage < self.stage {
            return Err(Error::StageRegression {
                from: self.stage.name().to_string(),
                to: stage.name().to_string(),
            });
        }
        if bits.len() > self.bits.len() {
            return Err(Error::InvalidParams(format!(
                "a {} key of {} bits cannot grow to {} bits at stage {}",
                self.stage.name(),
                self.bits.len(),
                bits.len(),
                stage.name()
            )));
        }
        Ok(KeyMaterial {
            bits,
            stage,
            origin_session: self.origin_session.clone(),
        })
    }

    /// Number of positions where the two keys disagree.
    pub fn hamming_distance(&self, other: &KeyMaterial) -> usize {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// What the receiver saw for one position: the basis it chose and, when the
/// channel produced a click, the bit it read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub basis: Basis,
    pub outcome: Option<bool>,
}

impl Measurement {
    pub fn detected(&self) -> bool {
        self.outcome.is_some()
    }
}

/// Draws `n` symbols with independent uniform bit and basis.
pub fn prepare_sequence(n: usize, rng: &mut SimRng) -> Result<Vec<QubitSymbol>> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let bit = rng.gen::<bool>();
        let basis = Basis::random(rng);
        out.push(QubitSymbol { bit, basis });
    }
    Ok(out)
}

/// Measures a symbol sequence behind a channel.
///
/// The receiver draws a uniform basis for every position. A position with no
/// click is lost. On a click with matching bases the outcome equals the sent
/// bit except for channel errors (optical readout errors on genuine
/// detections, coin-flip bits on dark counts); with mismatched bases the
/// outcome is uniform.
pub fn measure_sequence(
    symbols: &[QubitSymbol],
    channel: &ChannelParams,
    rng: &mut SimRng,
) -> Result<Vec<Measurement>> {
    if symbols.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut out = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        out.push(measure_one(Some(*symbol), channel, rng));
    }
    Ok(out)
}

/// Measures one position. `symbol = None` models a vacuum slot (an upstream
/// relay lost the pulse): only a dark count can click, and it reads out a
/// uniform bit.
pub(crate) fn measure_one(
    symbol: Option<QubitSymbol>,
    channel: &ChannelParams,
    rng: &mut SimRng,
) -> Measurement {
    let basis = Basis::random(rng);
    let outcome = match symbol {
        Some(sym) => match channel.simulate_pulse(rng) {
            crate::channel::PulseOutcome::NoClick => None,
            click => {
                if basis == sym.basis {
                    Some(sym.bit ^ (click == crate::channel::PulseOutcome::ErrorClick))
                } else {
                    Some(rng.gen::<bool>())
                }
            }
        },
        None => {
            if channel.p_dark > 0.0 && rng.gen_bool(channel.p_dark) {
                Some(rng.gen::<bool>())
            } else {
                None
            }
        }
    };
    Measurement { basis, outcome }
}

/// Result of sifting one exchange.
#[derive(Debug, Clone)]
pub struct SiftOutcome {
    pub key_a: KeyMaterial,
    pub key_b: KeyMaterial,
    pub kept_positions: Vec<usize>,
}

/// Keeps exactly the positions that are detected and measured in the sent
/// basis, returning both parties' bit strings there.
pub fn sift(
    sent: &[QubitSymbol],
    received: &[Measurement],
    origin_session: &str,
) -> Result<SiftOutcome> {
    if sent.len() != received.len() {
        return Err(Error::ProtocolDesync {
            left: sent.len(),
            right: received.len(),
        });
    }
    let mut key_a = Vec::new();
    let mut key_b = Vec::new();
    let mut kept = Vec::new();
    for (i, (sym, meas)) in sent.iter().zip(received.iter()).enumerate() {
        if let Some(bit) = meas.outcome {
            if meas.basis == sym.basis {
                key_a.push(sym.bit);
                key_b.push(bit);
                kept.push(i);
            }
        }
    }
    Ok(SiftOutcome {
        key_a: KeyMaterial::new(KeyStage::Sifted, key_a, origin_session),
        key_b: KeyMaterial::new(KeyStage::Sifted, key_b, origin_session),
        kept_positions: kept,
    })
}

/// Outcome of sacrificial QBER estimation.
#[derive(Debug, Clone)]
pub struct QberEstimate {
    pub estimate: f64,
    pub sample_positions: Vec<usize>,
    pub remaining_a: KeyMaterial,
    pub remaining_b: KeyMaterial,
}

/// Compares a uniform random sample of positions and discards them.
pub fn estimate_qber(
    key_a: &KeyMaterial,
    key_b: &KeyMaterial,
    sample_fraction: f64,
    rng: &mut SimRng,
) -> Result<QberEstimate> {
    if key_a.len() != key_b.len() {
        return Err(Error::ProtocolDesync {
            left: key_a.len(),
            right: key_b.len(),
        });
    }
    if !(sample_fraction > 0.0 && sample_fraction < 1.0) {
        return Err(Error::InvalidParams(format!(
            "sample_fraction must be in (0, 1), got {sample_fraction}"
        )));
    }
    let n = key_a.len();
    let sample_size = ((n as f64 * sample_fraction).floor() as usize).max(1);
    if sample_size >= n {
        return Err(Error::InsufficientKey {
            requested: sample_size,
            available: n,
        });
    }
    let mut sample: Vec<usize> = rand::seq::index::sample(rng, n, sample_size).into_vec();
    sample.sort_unstable();

    let a = key_a.bits();
    let b = key_b.bits();
    let mismatches = sample.iter().filter(|&&i| a[i] != b[i]).count();
    let estimate = mismatches as f64 / sample_size as f64;

    let mut in_sample = vec![false; n];
    for &i in &sample {
        in_sample[i] = true;
    }
    let keep = |bits: &[bool]| -> Vec<bool> {
        bits.iter()
            .enumerate()
            .filter(|(i, _)| !in_sample[*i])
            .map(|(_, &b)| b)
            .collect()
    };
    let remaining_a = key_a.advance(KeyStage::Sifted, keep(a))?;
    let remaining_b = key_b.advance(KeyStage::Sifted, keep(b))?;
    Ok(QberEstimate {
        estimate,
        sample_positions: sample,
        remaining_a,
        remaining_b,
    })
}
