//! Per-point random streams.
//!
//! Every (SNR point, purpose) pair gets its own 64-bit seed
//!
//! ```text
//! seed = splitmix64(master ^ splitmix64(snr_db.to_bits() ^ tag))
//! ```
//!
//! which is expanded with `ChaCha20Rng::seed_from_u64`. Payload chunk `k`
//! uses the payload seed with `set_stream(k)`, so chunks can be generated in
//! any order.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Probe,
    Training,
    Payload,
    Elm,
    Celm,
}

impl Purpose {
    pub const fn tag(self) -> u64 {
        match self {
            Purpose::Probe => 0x7072_6f62_6500_0001,
            Purpose::Training => 0x7472_6169_6e00_0002,
            Purpose::Payload => 0x7061_796c_6f00_0003,
            Purpose::Elm => 0x656c_6d00_0000_0004,
            Purpose::Celm => 0x6365_6c6d_0000_0005,
        }
    }
}

pub const fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, snr_db: f64, purpose: Purpose) -> u64 {
    splitmix64(master ^ splitmix64(snr_db.to_bits() ^ purpose.tag()))
}

pub fn point_rng(master: u64, snr_db: f64, purpose: Purpose) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(derive_seed(master, snr_db, purpose))
}

pub fn chunk_rng(master: u64, snr_db: f64, chunk: u64) -> ChaCha20Rng {
    let mut rng = point_rng(master, snr_db, Purpose::Payload);
    rng.set_stream(chunk);
    rng
}
