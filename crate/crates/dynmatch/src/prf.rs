//! Seeded pseudorandom functions used for ranks, hashing and seed derivation.

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn prf2(seed: u64, a: u64, b: u64) -> u64 {
    mix64(seed ^ mix64(a ^ mix64(b.wrapping_mul(0xD6E8_FEB8_6659_FD93))))
}

#[inline]
pub fn prf3(seed: u64, tag: u64, a: u64, b: u64) -> u64 {
    prf2(mix64(seed ^ tag.wrapping_mul(0xA076_1D64_78BD_642F)), a, b)
}

/// Maps 64 random bits to [0, 1) with 53-bit resolution.
#[inline]
pub fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Independent child seed for stream `idx` of purpose `tag`.
#[inline]
pub fn derive(seed: u64, tag: u64, idx: u64) -> u64 {
    prf3(seed, tag, idx, 0x5EED)
}
