//! Deterministic simulator and protocol library for quantum key
//! distribution over lossy fiber links.
//!
//! The crate models a BB84 link from the physics up: a Poissonian photon
//! source thinned by fiber loss and detector efficiency, dark counts, an
//! intrinsic optical error rate, and the resulting raw key rate
//! q·μ·ν·η_t·η_d and QBER. On top of the link sit the protocol layers: the
//! two-party BB84 pipeline with sifting, sacrificial error estimation,
//! Cascade-style reconciliation and Toeplitz privacy amplification; an
//! intercept-resend eavesdropper; and a cellular trusted-relay network in
//! which base stations either source keys for their clients or chain
//! pairwise keys with one-time-pad masking so the final key length is
//! independent of the hop count.
//!
//! Everything is seeded: the same configuration always produces the same
//! keys, transcripts and artifacts.
//!
//! Start with the runnable examples (`cargo run --example bb84_session`),
//! or with [`bb84::session::run_session`] and [`network`] for the library
//! surface. The `qkd-sim` binary runs config-driven experiments and emits
//! CSV/JSON result tables.

pub mod adversary;
pub mod bb84;
pub mod channel;
pub mod classical;
pub mod config;
pub mod error;
pub mod network;
pub mod report;
pub mod rng;
pub mod transcript;

pub use error::{Error, Result};
