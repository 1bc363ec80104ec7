//! Session and network run records.
//!
//! A transcript is the audit trail of one protocol run: per-stage key
//! lengths, announcements, the measured QBER, leak counts, and the seeds
//! that make the run reproducible. Transcripts serialize to JSON with the
//! documented field names; sequence-level detail (bases, per-pulse
//! outcomes) is recorded only when explicitly requested.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRANSCRIPT_SCHEMA_VERSION: u32 = 1;

/// Key length at each processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLengths {
    pub raw: u64,
    pub sifted: u64,
    pub corrected: u64,
    #[serde(rename = "final")]
    pub final_len: u64,
}

impl StageLengths {
    /// Stage lengths never grow as the pipeline advances.
    pub fn validate(&self) -> Result<()> {
        if self.final_len <= self.corrected
            && self.corrected <= self.sifted
            && self.sifted <= self.raw
        {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "stage lengths must be non-increasing, got {self:?}"
            )))
        }
    }
}

/// What the eavesdropper saw, when one was configured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveSummary {
    pub intercept_fraction: f64,
    pub attacked_pulses: u64,
    /// Sifted positions the adversary knows with certainty (its basis
    /// matched the sender's on an attacked pulse).
    pub known_sifted_bits: u64,
    pub known_sifted_fraction: f64,
}

/// Sequence-level record of a session, for small runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDetail {
    /// Sender basis per pulse, one `x`/`y` character each.
    pub sent_bases: String,
    /// Receiver basis per pulse.
    pub received_bases: String,
    /// Receiver outcome per pulse: `-` lost, `0`/`1` measured bit.
    pub outcomes: String,
    pub kept_positions: Vec<u64>,
    pub sample_positions: Vec<u64>,
}

/// Full record of one two-party session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTranscript {
    pub schema_version: u32,
    pub kind: String,
    pub session_id: String,
    pub pulses_sent: u64,
    /// Pulses the receiver detected (any basis).
    pub detected: u64,
    pub stage_lengths: StageLengths,
    /// Sifted length over detected pulses.
    pub sifted_fraction: f64,
    pub measured_qber: Option<f64>,
    pub leaked_bits: u64,
    pub sample_size: u64,
    /// Seed both parties feed the privacy-amplification hash.
    pub amplification_seed: Option<u64>,
    pub distilled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eavesdropper: Option<EveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<SessionDetail>,
}

impl SessionTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }
}

/// Basis-agreement classification counts over a three-party run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationTally {
    pub secret_key: u64,
    pub partial_secret_key: u64,
    pub no_secret_key: u64,
}

/// What one relay node knows about the sifted key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayKnowledge {
    pub node: String,
    pub sifted_fraction_known: f64,
}

/// One-time-pad bookkeeping for one relay hop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopUsage {
    pub link: String,
    /// Pairwise key bits banked for this hop during setup.
    pub pairwise_key_bits: u64,
    /// Bits drawn from the bank to mask the forwarded message.
    pub drawn_bits: u64,
    /// Length of the masked message actually relayed.
    pub masked_message_bits: u64,
    /// Bits left in the bank afterwards.
    pub remaining_bits: u64,
}

/// Full record of one network protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTranscript {
    pub schema_version: u32,
    pub kind: String,
    pub endpoints: [String; 2],
    /// Relay path, source first.
    pub route: Vec<String>,
    pub n_qbs: u32,
    pub pulses_sent: u64,
    /// Positions detected by every party that had to measure.
    pub detected: u64,
    pub stage_lengths: StageLengths,
    pub sifted_fraction: f64,
    pub expected_sifted_fraction: f64,
    pub measured_qber: Option<f64>,
    pub leaked_bits: u64,
    pub amplification_seed: Option<u64>,
    pub distilled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationTally>,
    /// Sifted-key knowledge attributed to each relay node; 1.0 records the
    /// trusted-relay assumption the protocols are built on.
    pub relay_knowledge: Vec<RelayKnowledge>,
    pub hops: Vec<HopUsage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl NetworkTranscript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    /// One-time-pad discipline: every hop drew exactly as many bits as it
    /// masked, and nothing more.
    pub fn otp_balanced(&self) -> bool {
        self.hops.iter().all(|h| {
            h.drawn_bits == h.masked_message_bits
                && h.pairwise_key_bits == h.drawn_bits + h.remaining_bits
        })
    }
}
