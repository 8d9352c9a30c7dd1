#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vlc_elm::frontend::PolynomialNonlinearity;
use vlc_elm::geometry::ChannelMatrix;
use vlc_elm::harness::ExperimentConfig;

/// `W[i][j] = g[(i - j) mod L]` for the first `inputs` columns.
pub fn dense_from_generator(g: &[f64], inputs: usize) -> DMatrix<f64> {
    let l = g.len();
    DMatrix::from_fn(l, inputs, |i, j| g[(i + l - j) % l])
}

pub fn uniform_vec(len: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// reference scene with an identity LED model, written next to a temp config.
pub fn linear_config(dir: &std::path::Path, snr_db: Vec<f64>, payload: usize) -> ExperimentConfig {
    let coeffs = dir.join("identity.txt");
    std::fs::write(&coeffs, PolynomialNonlinearity::identity().to_text()).unwrap();
    let mut config = ExperimentConfig::default();
    config.nonlinearity.coefficients = Some(coeffs);
    config.sweep.snr_db = snr_db;
    config.sweep.payload_symbols = payload;
    config.validate().unwrap();
    config
}

/// 9×9 identity channel with an identity LED model.
pub fn toy_linear_config(
    dir: &std::path::Path,
    snr_db: Vec<f64>,
    payload: usize,
) -> ExperimentConfig {
    let h = dir.join("identity_h.csv");
    std::fs::write(&h, ChannelMatrix::identity(9).to_csv()).unwrap();
    let mut config = linear_config(dir, snr_db, payload);
    config.channel.matrix = Some(h);
    config.validate().unwrap();
    config
}
