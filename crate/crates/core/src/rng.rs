//! Deterministic named-stream randomness.
//!
//! Every stochastic component draws from a pure hash of
//! `(seed, domain label, integer ids...)`. Slot selection, bit-error draws and
//! shadowing each use their own domain, so toggling one component never
//! perturbs the draws of another, and concurrent execution is bit-identical
//! to sequential execution because no RNG state is shared or advanced.

/// SplitMix64 finalizer: avalanches one 64-bit word.
#[inline]
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds one value into a running hash.
#[inline]
pub fn mix(h: u64, v: u64) -> u64 {
    splitmix64(h ^ v.rotate_left(31))
}

/// FNV-1a over a label, used to separate draw domains.
#[inline]
pub fn domain_tag(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives the stream value for `(seed, domain, ids...)`.
pub fn stream(seed: u64, domain: &str, ids: &[u64]) -> u64 {
    let mut h = mix(splitmix64(seed), domain_tag(domain));
    for id in ids {
        h = mix(h, *id);
    }
    h
}

/// Maps a hash to a uniform f64 in `[0, 1)`.
#[inline]
pub fn unit_open(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Maps a hash to a uniform f64 in `(0, 1]` (safe as a logarithm argument).
#[inline]
pub fn unit_closed(h: u64) -> f64 {
    ((h >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[0, 1)` for a named stream.
pub fn uniform(seed: u64, domain: &str, ids: &[u64]) -> f64 {
    unit_open(stream(seed, domain, ids))
}

/// Uniform integer draw in `[0, bound)` for a named stream (`bound` ≥ 1).
pub fn uniform_index(seed: u64, domain: &str, ids: &[u64], bound: u64) -> u64 {
    debug_assert!(bound >= 1);
    // Modulo bias is negligible for bound << 2^64 (worst case here: 2^15 slots).
    stream(seed, domain, ids) % bound
}

/// Standard normal draw (Box-Muller) for a named stream.
pub fn standard_normal(seed: u64, domain: &str, ids: &[u64]) -> f64 {
    let h = stream(seed, domain, ids);
    let u1 = unit_closed(h);
    let u2 = unit_open(splitmix64(h ^ 0xA5A5_A5A5_A5A5_A5A5));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
