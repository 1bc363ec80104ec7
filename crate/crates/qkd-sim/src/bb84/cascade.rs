//! Interactive block-parity error correction (Cascade style).
//!
//! One side holds the reference key, the other corrects toward it by
//! exchanging block parities over the public channel. Mismatched blocks are
//! binary-searched down to the offending bit; fixing a bit re-flags the
//! blocks containing it in every other pass, which is where the scheme's
//! power comes from. Runs a fixed number of passes with doubling block sizes
//! over fresh seeded shuffles, then verifies with a short digest.
//!
//! Every announced parity bit is counted; that count is the leakage privacy
//! amplification later subtracts.

use rand::Rng;

use crate::classical::PublicChannel;
use crate::error::{Error, Result};
use crate::rng::SimRng;

use super::{KeyMaterial, KeyStage};

/// Tuning for one reconciliation run.
#[derive(Debug, Clone)]
pub struct CascadeConfig {
    /// QBER estimate from the sampling stage; sizes the first-pass blocks
    /// as ceil(0.73 / max(hint, 0.005)). The floor keeps the block size
    /// finite when the sample saw no errors.
    pub qber_hint: f64,
    /// Number of passes (block size doubles each pass).
    pub passes: usize,
    /// Refuse to start above this estimated QBER.
    pub abort_threshold: f64,
    /// Cap on binary searches; 0 picks a generous automatic budget.
    pub max_searches: usize,
}

impl CascadeConfig {
    pub fn new(qber_hint: f64) -> Self {
        CascadeConfig {
            qber_hint,
            passes: 4,
            abort_threshold: 0.11,
            max_searches: 0,
        }
    }
}

/// What a completed reconciliation produced.
#[derive(Debug, Clone)]
pub struct CorrectionOutcome {
    pub key_a: KeyMaterial,
    pub key_b: KeyMaterial,
    /// Parity bits disclosed over the public channel.
    pub leaked_bits: usize,
    /// Passes actually run (early exit once the digests agree).
    pub passes_run: usize,
    /// Bits flipped on the correcting side.
    pub corrected_errors: usize,
}

/// Reconciles `key_b` toward `key_a`.
///
/// On success both returned keys are bit-identical and tagged corrected.
/// Aborts when the QBER hint is above the design threshold, when the digest
/// still mismatches after the final pass, or (defensively) when the search
/// budget is exhausted.
pub fn error_correct(
    key_a: &KeyMaterial,
    key_b: &KeyMaterial,
    config: &CascadeConfig,
    channel: &mut PublicChannel,
    rng: &mut SimRng,
) -> Result<CorrectionOutcome> {
    if key_a.len() != key_b.len() {
        return Err(Error::ProtocolDesync {
            left: key_a.len(),
            right: key_b.len(),
        });
    }
    if key_a.is_empty() {
        return Err(Error::EmptySequence);
    }
    if config.qber_hint > config.abort_threshold {
        return Err(Error::QberTooHigh {
            measured: config.qber_hint,
            threshold: config.abort_threshold,
        });
    }

    let n = key_a.len();
    let a: Vec<bool> = key_a.bits().to_vec();
    let mut b: Vec<bool> = key_b.bits().to_vec();

    let hint = config.qber_hint.max(0.005);
    let base_block = ((0.73 / hint).ceil() as usize).clamp(1, n);
    let budget = if config.max_searches == 0 {
        n + 64
    } else {
        config.max_searches
    };

    let leaked_before = channel.parity_bits_disclosed();
    let mut corrected = 0usize;
    let mut searches = 0usize;
    let mut passes_run = 0usize;

    // Per processed pass: the position permutation, block size, and which
    // blocks currently disagree with the reference parity.
    struct Pass {
        perm: Vec<usize>,
        block_of: Vec<usize>,
        block_size: usize,
        mismatch: Vec<bool>,
    }
    let mut passes: Vec<Pass> = Vec::with_capacity(config.passes);

    let parity_over = |bits: &[bool], positions: &[usize]| -> bool {
        positions.iter().fold(false, |acc, &p| acc ^ bits[p])
    };

    for pass_idx in 0..config.passes {
        let block_size = (base_block << pass_idx).clamp(1, n);
        // first pass runs in natural order; later passes shuffle
        let mut perm: Vec<usize> = (0..n).collect();
        if pass_idx > 0 {
            // the shuffle seed is public control information
            channel.announce_control();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
        }
        let mut block_of = vec![0usize; n];
        for (idx, &pos) in perm.iter().enumerate() {
            block_of[pos] = idx / block_size;
        }
        let n_blocks = n.div_ceil(block_size);
        let mut mismatch = Vec::with_capacity(n_blocks);
        for positions in perm.chunks(block_size) {
            let pa = channel.announce_parity(parity_over(&a, positions));
            let pb = parity_over(&b, positions);
            mismatch.push(pa != pb);
        }
        passes.push(Pass {
            perm,
            block_of,
            block_size,
            mismatch,
        });
        passes_run += 1;

        // Drain every disagreeing block, cascading across earlier passes.
        let mut queue: Vec<(usize, usize)> = Vec::new();
        for (block, &m) in passes[pass_idx].mismatch.iter().enumerate() {
            if m {
                queue.push((pass_idx, block));
            }
        }
        while let Some((p, block)) = queue.pop() {
            if !passes[p].mismatch[block] {
                continue; // already settled by an earlier fix
            }
            if searches >= budget {
                return Err(Error::CorrectionBudgetExceeded { budget });
            }
            searches += 1;

            // Binary-search the block for the odd error.
            let lo = block * passes[p].block_size;
            let hi = ((block + 1) * passes[p].block_size).min(n);
            let mut span: Vec<usize> = passes[p].perm[lo..hi].to_vec();
            while span.len() > 1 {
                let half = span.len().div_ceil(2);
                let pa = channel.announce_parity(parity_over(&a, &span[..half]));
                let pb = parity_over(&b, &span[..half]);
                if pa != pb {
                    span.truncate(half);
                } else {
                    span.drain(..half);
                }
            }
            let fix = span[0];
            b[fix] = !b[fix];
            corrected += 1;

            // The flip toggles the parity state of the containing block in
            // every processed pass (including this one).
            for (q, pass) in passes.iter_mut().enumerate() {
                let bq = pass.block_of[fix];
                pass.mismatch[bq] = !pass.mismatch[bq];
                if pass.mismatch[bq] {
                    queue.push((q, bq));
                }
            }
        }

        // Compare digests; if the keys already agree there is nothing left
        // to pay for in later passes.
        channel.announce_control();
        if digest(&a) == digest(&b) {
            break;
        }
    }

    if digest(&a) != digest(&b) {
        return Err(Error::CorrectionFailed { passes: passes_run });
    }

    let leaked_bits = channel.parity_bits_disclosed() - leaked_before;
    Ok(CorrectionOutcome {
        key_a: key_a.advance(KeyStage::Corrected, a)?,
        key_b: key_b.advance(KeyStage::Corrected, b)?,
        leaked_bits,
        passes_run,
        corrected_errors: corrected,
    })
}

/// 64-bit FNV-1a over the packed bits; used only to verify that both sides
/// hold the same key.
fn digest(bits: &[bool]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    let mut byte = 0u8;
    for (i, &bit) in bits.iter().enumerate() {
        byte = (byte << 1) | bit as u8;
        if i % 8 == 7 {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
            byte = 0;
        }
    }
    hash ^= byte as u64;
    hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    hash ^= bits.len() as u64;
    hash.wrapping_mul(0x0000_0100_0000_01B3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn key(bits: Vec<bool>) -> KeyMaterial {
        KeyMaterial::new(KeyStage::Sifted, bits, "t")
    }

    fn flip_fraction(bits: &[bool], qber: f64, rng: &mut SimRng) -> Vec<bool> {
        bits.iter().map(|&b| b ^ rng.gen_bool(qber)).collect()
    }

    #[test]
    fn identical_inputs_leak_only_first_pass_parities() {
        let n = 1024;
        let bits: Vec<bool> = (0..n).map(|i| i % 5 == 0).collect();
        let mut channel = PublicChannel::new();
        let cfg = CascadeConfig::new(0.0); // block size ceil(0.73/0.005) = 146
        let out = error_correct(
            &key(bits.clone()),
            &key(bits),
            &cfg,
            &mut channel,
            &mut rng_from_seed(1),
        )
        .unwrap();
        assert_eq!(out.key_a, out.key_b);
        assert_eq!(out.corrected_errors, 0);
        assert_eq!(out.passes_run, 1);
        // ceil(1024 / 146) = 8 block parities, nothing else
        assert_eq!(out.leaked_bits, 8);
    }

    #[test]
    fn single_error_in_64_bits_is_found_by_binary_search() {
        // Hand trace with hint 0.05: block size ceil(0.73/0.05) = 15, so
        // pass 1 announces ceil(64/15) = 5 block parities. The error sits at
        // position 0, inside a 15-wide block; the search halves 15 -> 8 -> 4
        // -> 2 -> 1, announcing 4 parities. Total leakage 9 bits.
        let n = 64;
        let a_bits: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let mut b_bits = a_bits.clone();
        b_bits[0] = !b_bits[0];
        let mut channel = PublicChannel::new();
        let cfg = CascadeConfig::new(0.05);
        let out = error_correct(
            &key(a_bits),
            &key(b_bits),
            &cfg,
            &mut channel,
            &mut rng_from_seed(2),
        )
        .unwrap();
        assert_eq!(out.key_a, out.key_b);
        assert_eq!(out.corrected_errors, 1);
        assert_eq!(out.passes_run, 1);
        assert_eq!(out.leaked_bits, 9);
    }

    #[test]
    fn corrects_reference_operating_point_noise() {
        let n = 20_000;
        let mut rng = rng_from_seed(3);
        let a_bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let b_bits = flip_fraction(&a_bits, 0.045, &mut rng);
        let mut channel = PublicChannel::new();
        let cfg = CascadeConfig::new(0.045);
        let out = error_correct(&key(a_bits), &key(b_bits), &cfg, &mut channel, &mut rng).unwrap();
        assert_eq!(out.key_a, out.key_b);
        assert!(out.corrected_errors > 0);
        assert!(out.leaked_bits > 0);
        assert_eq!(out.key_a.stage(), KeyStage::Corrected);
    }

    #[test]
    fn repeated_runs_converge_across_the_design_range() {
        // success probability >= 1 - 1e-3 for QBER <= 11%; check a batch of
        // independent runs near the threshold all converge
        let n = 4096;
        for seed in 0..20 {
            let mut rng = rng_from_seed(1000 + seed);
            let a_bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let b_bits = flip_fraction(&a_bits, 0.10, &mut rng);
            let mut channel = PublicChannel::new();
            let cfg = CascadeConfig::new(0.10);
            let out = error_correct(&key(a_bits), &key(b_bits), &cfg, &mut channel, &mut rng)
                .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert_eq!(out.key_a, out.key_b, "seed {seed}");
        }
    }

    #[test]
    fn aborts_above_the_design_threshold() {
        let bits = vec![true; 128];
        let mut channel = PublicChannel::new();
        let cfg = CascadeConfig::new(0.25);
        let err = error_correct(
            &key(bits.clone()),
            &key(bits),
            &cfg,
            &mut channel,
            &mut rng_from_seed(4),
        )
        .unwrap_err();
        assert!(matches!(err, Error::QberTooHigh { .. }));
        assert!(err.is_protocol_abort());
    }

    #[test]
    fn leakage_grows_with_error_rate_on_average() {
        let n = 10_000;
        let mut leaks = Vec::new();
        for &qber in &[0.01, 0.03, 0.05, 0.08] {
            let mut rng = rng_from_seed(5);
            let a_bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
            let b_bits = flip_fraction(&a_bits, qber, &mut rng);
            let mut channel = PublicChannel::new();
            let cfg = CascadeConfig::new(qber);
            let out =
                error_correct(&key(a_bits), &key(b_bits), &cfg, &mut channel, &mut rng).unwrap();
            leaks.push(out.leaked_bits);
        }
        for pair in leaks.windows(2) {
            assert!(pair[1] >= pair[0], "leakage not monotone: {leaks:?}");
        }
    }

    #[test]
    fn length_mismatch_is_a_desync() {
        let mut channel = PublicChannel::new();
        let cfg = CascadeConfig::new(0.01);
        assert!(matches!(
            error_correct(
                &key(vec![true; 8]),
                &key(vec![true; 9]),
                &cfg,
                &mut channel,
                &mut rng_from_seed(6)
            ),
            Err(Error::ProtocolDesync { .. })
        ));
    }
}
