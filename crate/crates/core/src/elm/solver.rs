use nalgebra::DMatrix;

use crate::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// Relative singular-value cutoff for the unregularised pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Output weights `B` (`L × N_t`) from `Φ` (`M × L`) and targets `T` (`N_t × M`).
///
/// With `ridge > 0` each column solves `(ΦᵀΦ + ridge I) β_n = Φᵀ t_n` through
/// a Cholesky factorisation. With `ridge == 0` the minimum-norm least-squares
/// solution `Φ† t_n` is computed from an SVD, dropping singular values below
/// `σ_max · PINV_CUTOFF`.
pub fn train_output_weights(
    phi: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    ridge: f64,
) -> Result<DMatrix<f64>> {
    if phi.nrows() == 0 || phi.ncols() == 0 {
        return Err(Error::Dimension("empty hidden output matrix".into()));
    }
    if targets.ncols() != phi.nrows() {
        return Err(Error::Dimension(format!(
            "{} targets for {} hidden responses",
            targets.ncols(),
            phi.nrows()
        )));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ridge must be finite and >= 0, got {ridge}"
        )));
    }
    let rhs_targets = targets.transpose();
    if ridge == 0.0 {
        return pseudoinverse_solve(phi, &rhs_targets);
    }

    let l = phi.ncols();
    let gram = phi.tr_mul(phi) + DMatrix::identity(l, l) * ridge;
    let rhs = phi.tr_mul(&rhs_targets);
    match gram.clone().cholesky() {
        Some(chol) => Ok(chol.solve(&rhs)),
        // only reachable when ridge is below rounding of the Gram diagonal
        None => {
            let svd = gram.svd(true, true);
            let eps = svd.singular_values.max() * PINV_CUTOFF;
            svd.solve(&rhs, eps)
                .map_err(|e| Error::RankDeficient(e.to_string()))
        }
    }
}

fn pseudoinverse_solve(phi: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = phi.clone().svd(true, true);
    let eps = svd.singular_values.max() * PINV_CUTOFF;
    svd.solve(rhs, eps)
        .map_err(|e| Error::RankDeficient(e.to_string()))
}
