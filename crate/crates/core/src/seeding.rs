//! Deterministic derivation of child seeds from a master seed.
//!
//! Every stochastic stage (shot sampling, noise trajectories, variant
//! permutations, parameter init) takes an explicit seed. Child seeds are
//! derived with a splitmix64 finalizer so that independent streams never
//! alias and the whole experiment is reproducible from one manifest seed.

/// Derive the seed for stream `stream` of the generator family rooted at
/// `master`. Distinct `(master, stream)` pairs give statistically
/// independent seeds.
pub fn derive(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
