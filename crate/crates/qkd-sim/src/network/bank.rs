//! Pairwise key bank.
//!
//! Relay protocols pre-establish pairwise keys between adjacent base
//! stations and bank them; runs then draw masking material and abort on
//! exhaustion rather than pausing to regenerate. Draws are atomic: a draw
//! either returns the full requested length or leaves the bank untouched.
//! When a bank must be shared across threads, wrap it in a mutex — the bank
//! is the single synchronization point of a relay run.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::topology::{ordered, NodeId};

#[derive(Debug, Default, Clone)]
struct Account {
    bits: Vec<bool>,
    drawn: usize,
    deposited: usize,
}

/// One-time-pad material indexed by unordered node pair.
#[derive(Debug, Default, Clone)]
pub struct KeyBank {
    accounts: BTreeMap<(NodeId, NodeId), Account>,
}

impl KeyBank {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(a: &NodeId, b: &NodeId) -> (NodeId, NodeId) {
        let (x, y) = ordered(a, b);
        (x.clone(), y.clone())
    }

    pub fn deposit(&mut self, a: &NodeId, b: &NodeId, bits: Vec<bool>) {
        let account = self.accounts.entry(Self::key(a, b)).or_default();
        account.deposited += bits.len();
        account.bits.extend(bits);
    }

    /// Unused bits currently available for the pair.
    pub fn available(&self, a: &NodeId, b: &NodeId) -> usize {
        self.accounts
            .get(&Self::key(a, b))
            .map_or(0, |acc| acc.bits.len() - acc.drawn)
    }

    /// Total bits ever deposited for the pair.
    pub fn deposited(&self, a: &NodeId, b: &NodeId) -> usize {
        self.accounts
            .get(&Self::key(a, b))
            .map_or(0, |acc| acc.deposited)
    }

    /// Total bits ever drawn for the pair.
    pub fn drawn(&self, a: &NodeId, b: &NodeId) -> usize {
        self.accounts
            .get(&Self::key(a, b))
            .map_or(0, |acc| acc.drawn)
    }

    /// Removes exactly `n` bits for the pair, or fails without side effects.
    /// Drawn material is gone for good — pads are never reused.
    pub fn draw(&mut self, a: &NodeId, b: &NodeId, n: usize) -> Result<Vec<bool>> {
        let available = self.available(a, b);
        if available < n {
            let (x, y) = ordered(a, b);
            return Err(Error::KeyExhausted {
                link: format!("{x}~{y}"),
                needed: n,
                available,
            });
        }
        let account = self
            .accounts
            .get_mut(&Self::key(a, b))
            .expect("available > 0 implies the account exists");
        let pad = account.bits[account.drawn..account.drawn + n].to_vec();
        account.drawn += n;
        Ok(pad)
    }
}
