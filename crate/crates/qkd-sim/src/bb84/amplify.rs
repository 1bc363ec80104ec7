//! Privacy amplification by Toeplitz universal hashing.
//!
//! The corrected key is compressed to
//! `l = max(0, floor(n * (1 - h2(e)) - leaked - s))` bits, where `e` is the
//! measured QBER, `leaked` the parity bits disclosed during reconciliation,
//! and `s` a fixed security margin. The compressor is a random binary
//! Toeplitz matrix drawn from a seeded stream; both parties feed the same
//! seed and obtain the same final key.

use rand::Rng;

use crate::error::Result;
use crate::rng::SimRng;

use super::{KeyMaterial, KeyStage};

/// Binary entropy h2(p) in bits; 0 at p = 0 and p = 1 by convention.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Final key length for an `n`-bit corrected key:
/// `max(0, floor(n * (1 - h2(qber)) - leaked_bits - security_margin))`.
pub fn final_key_length(
    n: usize,
    measured_qber: f64,
    leaked_bits: usize,
    security_margin: usize,
) -> usize {
    let l = (n as f64) * (1.0 - binary_entropy(measured_qber))
        - leaked_bits as f64
        - security_margin as f64;
    if l <= 0.0 {
        0
    } else {
        l.floor() as usize
    }
}

/// Compresses a corrected key into the final secret key.
///
/// An output length of zero is a legitimate outcome (nothing distillable),
/// returned as an empty final-stage key rather than an error.
pub fn privacy_amplify(
    key: &KeyMaterial,
    measured_qber: f64,
    leaked_bits: usize,
    security_margin: usize,
    rng: &mut SimRng,
) -> Result<KeyMaterial> {
    let n = key.len();
    let out_len = final_key_length(n, measured_qber, leaked_bits, security_margin);
    if out_len == 0 {
        return key.advance(KeyStage::Final, Vec::new());
    }
    key.advance(KeyStage::Final, toeplitz_hash(key.bits(), out_len, rng))
}

/// Multiplies the input by a random `out_len x n` binary Toeplitz matrix.
///
/// The matrix is defined by its `n + out_len - 1` diagonal bits, drawn from
/// `rng`. Row i+1 is row i shifted one position with one fresh bit entering;
/// the multiply keeps a sliding word-packed window of the current row.
fn toeplitz_hash(input: &[bool], out_len: usize, rng: &mut SimRng) -> Vec<bool> {
    let n = input.len();
    let words = n.div_ceil(64);
    let top_mask: u64 = if n.is_multiple_of(64) {
        !0
    } else {
        (1u64 << (n % 64)) - 1
    };

    let mut key_words = vec![0u64; words];
    for (j, &bit) in input.iter().enumerate() {
        if bit {
            key_words[j / 64] |= 1 << (j % 64);
        }
    }

    // Row 0 holds diagonal bits d[0..n] reversed: window bit j = d[n-1-j].
    let mut diag = BitDraw::default();
    let first: Vec<bool> = (0..n).map(|_| diag.next(rng)).collect();
    let mut window = vec![0u64; words];
    for (j, &bit) in first.iter().rev().enumerate() {
        if bit {
            window[j / 64] |= 1 << (j % 64);
        }
    }

    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        if i > 0 {
            // shift the window up one bit and feed the next diagonal bit in
            let mut carry = diag.next(rng) as u64;
            for w in window.iter_mut() {
                let next = *w >> 63;
                *w = (*w << 1) | carry;
                carry = next;
            }
            window[words - 1] &= top_mask;
        }
        let parity = window
            .iter()
            .zip(key_words.iter())
            .fold(0u32, |acc, (w, k)| acc ^ (w & k).count_ones())
            & 1;
        out.push(parity == 1);
    }
    out
}

/// Pulls single bits out of buffered 64-bit draws.
#[derive(Default)]
struct BitDraw {
    buf: u64,
    left: u32,
}

impl BitDraw {
    fn next(&mut self, rng: &mut SimRng) -> bool {
        if self.left == 0 {
            self.buf = rng.gen::<u64>();
            self.left = 64;
        }
        let bit = self.buf & 1 == 1;
        self.buf >>= 1;
        self.left -= 1;
        bit
    }
}
