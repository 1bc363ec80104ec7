//! The quantum cellular network: topology, routing, and the two key-sharing
//! protocols built on trusted base stations.
//!
//! [`chain::protocol_a`] shares a key between two clients of one cell with
//! the base station as source; [`chain::protocol_a_chain`] generalizes it
//! across relays at the cost of a sifted fraction of 2^-(n+1);
//! [`relay::protocol_b`] instead banks pairwise keys between adjacent base
//! stations and forwards the raw material under one-time-pad masks, keeping
//! the final key length independent of the hop count.

use crate::bb84::Basis;

pub mod bank;
pub mod chain;
pub mod relay;
pub mod route;
pub mod topology;

pub use bank::KeyBank;
pub use chain::{
    protocol_a, protocol_a_chain, run_relay_chain, ChainChannels, ChainOutcome, LinkSpec,
    NetworkRunConfig,
};
pub use relay::{protocol_b, RelayConfig};
pub use route::route;
pub use topology::{CellId, NodeId, NodeKind, Topology};

/// What a basis triple (client, base station, client) yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisAgreement {
    /// All three parties agree: the position enters the shared secret key.
    SecretKey,
    /// The base station agrees with exactly one client: usable only toward
    /// that side, discarded here.
    PartialSecretKey,
    /// The clients agree with each other but not with the base station.
    NoSecretKey,
}

/// Classifies one basis triple. Total over all 8 combinations.
pub fn classify_bases(qnc1: Basis, qbs: Basis, qnc2: Basis) -> BasisAgreement {
    if qnc1 == qbs && qbs == qnc2 {
        BasisAgreement::SecretKey
    } else if (qbs == qnc1) != (qbs == qnc2) {
        BasisAgreement::PartialSecretKey
    } else {
        BasisAgreement::NoSecretKey
    }
}
