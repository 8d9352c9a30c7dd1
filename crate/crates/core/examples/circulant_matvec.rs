//! FFT matvec against the materialised partial-circulant matrix: agreement
//! and wall time.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use vlc_elm::circulant::CirculantLayer;

fn main() -> vlc_elm::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    println!(
        "{:>6} {:>6} {:>12} {:>12} {:>10}",
        "L", "N_r", "fft us", "dense us", "max err"
    );
    for log_l in [6, 8, 10, 12] {
        let l = 1usize << log_l;
        let nr = l / 2;
        let g: Vec<f64> = (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let x: Vec<f64> = (0..nr).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let layer = CirculantLayer::from_generator(g.clone(), nr)?;
        let w = DMatrix::from_fn(l, nr, |i, j| g[(i + l - j) % l]);
        let xv = DVector::from_column_slice(&x);

        let reps = 50;
        let t = Instant::now();
        let mut fast = Vec::new();
        for _ in 0..reps {
            fast = layer.matvec(&x)?;
        }
        let t_fft = t.elapsed().as_secs_f64() / reps as f64;
        let t = Instant::now();
        let mut dense = DVector::zeros(l);
        for _ in 0..reps {
            dense = &w * &xv;
        }
        let t_dense = t.elapsed().as_secs_f64() / reps as f64;
        let err = fast
            .iter()
            .zip(dense.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{l:>6} {nr:>6} {:>12.1} {:>12.1} {err:>10.1e}",
            t_fft * 1e6,
            t_dense * 1e6
        );
    }
    Ok(())
}
