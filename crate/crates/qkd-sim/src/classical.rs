//! In-process stand-in for the authenticated public channel.
//!
//! Every disclosure the protocol makes — parity bits during reconciliation,
//! masked relay payloads — flows through a [`PublicChannel`] so leak
//! accounting lives in one place and a wire transport can replace this
//! without touching protocol logic. The channel is modeled as authenticated,
//! reliable and ordered.

/// Records what has been said in public during a session.
#[derive(Debug, Default, Clone)]
pub struct PublicChannel {
    parity_bits: usize,
    relayed_bits: usize,
    messages: usize,
}

impl PublicChannel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Discloses one parity bit (error-correction traffic) and returns it.
    pub fn announce_parity(&mut self, parity: bool) -> bool {
        self.parity_bits += 1;
        self.messages += 1;
        parity
    }

    /// Forwards an opaque payload (relay traffic); returns it unchanged.
    pub fn relay(&mut self, payload: &[bool]) -> Vec<bool> {
        self.relayed_bits += payload.len();
        self.messages += 1;
        payload.to_vec()
    }

    /// Announces a non-secret control value (a permutation seed, a
    /// verification digest); counted as a message, not as key leakage.
    pub fn announce_control(&mut self) {
        self.messages += 1;
    }

    /// Parity bits disclosed so far; this is what privacy amplification
    /// must pay for.
    pub fn parity_bits_disclosed(&self) -> usize {
        self.parity_bits
    }

    pub fn relayed_bits(&self) -> usize {
        self.relayed_bits
    }

    pub fn messages(&self) -> usize {
        self.messages
    }
}
