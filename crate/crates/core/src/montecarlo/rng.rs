//! Per-replicate random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for one replicate at one grid point. Depends only on the three
/// indices, so adding grid points or reordering work leaves other draws
/// untouched.
pub fn replicate_rng(master: u64, point: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master ^ splitmix64(point)));
    rng.set_stream(replicate);
    rng
}
