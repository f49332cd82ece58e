//! Deterministic stream derivation and small sampling helpers.
//!
//! Every random decision in the workbench flows from a single `u64` run seed
//! through `derive`, which mixes the parent seed with a label hash and any
//! number of integer indices. Streams derived with distinct labels or
//! indices are independent for practical purposes; equal inputs always give
//! the same stream, which is what makes reruns byte-reproducible.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer. Good avalanche, cheap, stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// FNV-1a over the label bytes, so stream identity depends on the label
/// text and not on call order.
fn hash_label(label: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Derives a child seed from `seed`, a label, and positional indices.
pub fn derive(seed: u64, label: &str, indices: &[u64]) -> u64 {
    let mut acc = mix(seed ^ hash_label(label));
    for (pos, idx) in indices.iter().enumerate() {
        acc = mix(acc ^ idx.wrapping_add(1).rotate_left((pos as u32) & 63));
    }
    acc
}

/// Builds the ChaCha8 stream for a derived seed.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[0, 1)`.
pub fn uniform_f64<R: RngCore>(rng: &mut R) -> f64 {
    // 53 random mantissa bits; exact on every platform.
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller. One draw per call keeps call sites
/// simple; the discarded half costs nothing at this scale.
pub fn standard_normal<R: RngCore>(rng: &mut R) -> f64 {
    #[allow(unused_imports)]
    use num_traits::Float;
    let mut u1 = uniform_f64(rng);
    if u1 <= f64::MIN_POSITIVE {
        u1 = f64::MIN_POSITIVE;
    }
    let u2 = uniform_f64(rng);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * core::f64::consts::PI * u2;
    r * theta.cos()
}

/// Uniform integer in `[0, bound)`. `bound` must be nonzero.
pub fn uniform_index<R: RngCore>(rng: &mut R, bound: usize) -> usize {
    debug_assert!(bound > 0);
    rng.gen_range(0..bound)
}

/// Samples `count` distinct indices from `weights.len()` items, proportional
/// to weight, by sequential draws with renormalization. Returned indices are
/// sorted ascending. Weights must be nonnegative with a positive total.
pub fn weighted_sample_without_replacement<R: RngCore>(
    rng: &mut R,
    weights: &[f64],
    count: usize,
) -> Vec<usize> {
    debug_assert!(count <= weights.len());
    let mut remaining: Vec<f64> = weights.to_vec();
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    for _ in 0..count {
        let total: f64 = remaining.iter().sum();
        debug_assert!(total > 0.0, "ran out of weight mass");
        let mut target = uniform_f64(rng) * total;
        let mut chosen = usize::MAX;
        for (i, w) in remaining.iter().enumerate() {
            if *w <= 0.0 {
                continue;
            }
            target -= *w;
            if target < 0.0 {
                chosen = i;
                break;
            }
            // Float underflow can leave target barely positive after the
            // last positive weight; remember it as fallback.
            chosen = i;
        }
        picked.push(chosen);
        remaining[chosen] = 0.0;
    }
    picked.sort_unstable();
    picked
}
