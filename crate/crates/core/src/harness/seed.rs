use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a bijection on `u64`.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for `(point, realization)` under a master seed. For a fixed master
/// seed the map is injective on indices below `2³²`: the pair is packed into
/// one word, offset by a seed-dependent constant and passed through a
/// bijection.
pub fn sub_seed(master: u64, point: usize, realization: usize) -> u64 {
    debug_assert!(point <= u32::MAX as usize && realization <= u32::MAX as usize);
    let packed = ((point as u64) << 32) | realization as u64;
    mix64(mix64(master).wrapping_add(packed))
}

/// Independent stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
