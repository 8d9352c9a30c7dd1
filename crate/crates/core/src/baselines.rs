//! Reference receivers that know the channel matrix: zero forcing and LMMSE
//! equalisation, each optionally followed by a per-stream polynomial
//! postdistorter fitted on the training symbols.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::frontend::PamConstellation;
use crate::geometry::ChannelMatrix;
use crate::{Error, Result};

/// Relative singular-value floor below which `H` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Default postdistorter order, same as the LED model.
pub const DEFAULT_POSTDISTORTER_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EqualizerKind {
    Zf,
    Lmmse,
}

impl EqualizerKind {
    pub fn name(self) -> &'static str {
        match self {
            EqualizerKind::Zf => "ZF",
            EqualizerKind::Lmmse => "LMMSE",
        }
    }
}

/// `x̂ = output_offset + matrix · (r − input_offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEqualizer {
    pub kind: EqualizerKind,
    /// `N_t × N_r`.
    pub matrix: DMatrix<f64>,
    pub input_offset: DVector<f64>,
    pub output_offset: DVector<f64>,
    pub warnings: Vec<String>,
}

impl LinearEqualizer {
    pub fn num_inputs(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn num_outputs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.len() != self.num_inputs() {
            return Err(Error::Dimension(format!(
                "equalizer expects {} inputs, got {}",
                self.num_inputs(),
                r.len()
            )));
        }
        Ok(&self.output_offset + &self.matrix * (r - &self.input_offset))
    }

    pub fn apply_batch(&self, received: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if received.nrows() != self.num_inputs() {
            return Err(Error::Dimension(format!(
                "equalizer expects {} inputs, got {}",
                self.num_inputs(),
                received.nrows()
            )));
        }
        let mut centered = received.clone();
        for mut col in centered.column_iter_mut() {
            col -= &self.input_offset;
        }
        let mut out = &self.matrix * centered;
        for mut col in out.column_iter_mut() {
            col += &self.output_offset;
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# vlc-elm linear equalizer\nformat=1\n");
        writeln!(out, "kind={}", self.kind.name()).unwrap();
        writeln!(out, "outputs={}", self.num_outputs()).unwrap();
        writeln!(out, "inputs={}", self.num_inputs()).unwrap();
        crate::elm::model_io::write_array(&mut out, "matrix", self.matrix.transpose().as_slice());
        crate::elm::model_io::write_array(&mut out, "input_offset", self.input_offset.iter());
        crate::elm::model_io::write_array(&mut out, "output_offset", self.output_offset.iter());
        out
    }
}

/// Moore-Penrose left inverse `(HᵀH)⁻¹Hᵀ`.
pub fn build_zf(channel: &ChannelMatrix) -> Result<LinearEqualizer> {
    let h = channel.gains();
    let (nr, nt) = h.shape();
    if nr < nt {
        return Err(Error::RankDeficient(format!(
            "ZF needs N_r >= N_t, got {nr} x {nt}"
        )));
    }
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * RANK_TOL) {
        return Err(Error::RankDeficient(format!(
            "channel matrix is rank deficient (σ_min/σ_max = {:e})",
            smin / smax
        )));
    }
    let matrix = svd
        .pseudo_inverse(0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    Ok(LinearEqualizer {
        kind: EqualizerKind::Zf,
        matrix,
        input_offset: DVector::zeros(nr),
        output_offset: DVector::zeros(nt),
        warnings: Vec::new(),
    })
}

/// LMMSE for the linear surrogate `r = Hx + n` with `x` i.i.d. uniform over
/// the constellation:
///
/// `x̂ = μ_x + C_x Hᵀ (H C_x Hᵀ + σ² I)⁻¹ (r − H μ_x)`.
///
/// Since `C_x = c I` the gain is evaluated in the equivalent `N_t × N_t`
/// form `(HᵀH + σ²/c I)⁻¹ Hᵀ`.
pub fn build_lmmse(
    channel: &ChannelMatrix,
    constellation: &PamConstellation,
    noise_variance: f64,
) -> Result<LinearEqualizer> {
    if !(noise_variance >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise variance must be >= 0, got {noise_variance}"
        )));
    }
    let h = channel.gains();
    let (nr, nt) = h.shape();
    let mu = constellation.mean();
    let c = constellation.variance();
    let mut warnings = Vec::new();

    let matrix = if noise_variance.is_infinite() {
        DMatrix::zeros(nt, nr)
    } else {
        let gram = h.tr_mul(h);
        let mut a = &gram + DMatrix::identity(nt, nt) * (noise_variance / c);
        let chol = match a.clone().cholesky() {
            Some(ch) => ch,
            None => {
                let jitter = RANK_TOL * gram.trace().max(f64::MIN_POSITIVE);
                warnings.push(format!(
                    "LMMSE innovation matrix singular, added {jitter:e} diagonal jitter"
                ));
                a += DMatrix::identity(nt, nt) * jitter;
                a.cholesky().ok_or_else(|| {
                    Error::RankDeficient("LMMSE system singular after jitter".into())
                })?
            }
        };
        chol.solve(&h.transpose())
    };
    let mean = DVector::from_element(nt, mu);
    Ok(LinearEqualizer {
        kind: EqualizerKind::Lmmse,
        input_offset: h * &mean,
        output_offset: mean,
        matrix,
        warnings,
    })
}

/// One polynomial per stream, `p_n(z) = Σ_{k=0..K} c_k u^k` with
/// `u = (z − center) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamPolynomial {
    pub center: f64,
    pub scale: f64,
    pub coeffs: Vec<f64>,
    /// Training mean squared error after the fit.
    pub residual: f64,
}

impl StreamPolynomial {
    pub fn apply(&self, z: f64) -> f64 {
        let u = (z - self.center) / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Postdistorter {
    pub order: usize,
    pub streams: Vec<StreamPolynomial>,
}

impl Postdistorter {
    pub fn apply(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        if z.len() != self.streams.len() {
            return Err(Error::Dimension(format!(
                "postdistorter has {} streams, got {}",
                self.streams.len(),
                z.len()
            )));
        }
        Ok(DVector::from_iterator(
            z.len(),
            z.iter().zip(&self.streams).map(|(v, p)| p.apply(*v)),
        ))
    }

    pub fn apply_batch(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.nrows() != self.streams.len() {
            return Err(Error::Dimension(format!(
                "postdistorter has {} streams, got {}",
                self.streams.len(),
                z.nrows()
            )));
        }
        Ok(DMatrix::from_fn(z.nrows(), z.ncols(), |n, m| {
            self.streams[n].apply(z[(n, m)])
        }))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# vlc-elm postdistorter\nformat=1\n");
        writeln!(out, "order={}", self.order).unwrap();
        writeln!(out, "streams={}", self.streams.len()).unwrap();
        for (n, p) in self.streams.iter().enumerate() {
            let values: Vec<f64> = [p.center, p.scale, p.residual]
                .into_iter()
                .chain(p.coeffs.iter().copied())
                .collect();
            crate::elm::model_io::write_array(&mut out, &format!("stream_{n}"), &values);
        }
        out
    }
}

/// Per-stream least-squares polynomial of degree `order` (with constant
/// term) mapping equalised training outputs onto the training symbols.
///
/// The Vandermonde system is centred and scaled, then solved through an SVD
/// for the minimum-norm solution. That keeps the fit defined when a stream
/// has fewer distinct values than coefficients, e.g. noiseless PAM.
pub fn fit_postdistorter(
    equalized: &DMatrix<f64>,
    targets: &DMatrix<f64>,
    order: usize,
) -> Result<Postdistorter> {
    if order == 0 {
        return Err(Error::InvalidParameter(
            "postdistorter order must be >= 1".into(),
        ));
    }
    if equalized.shape() != targets.shape() {
        return Err(Error::Dimension(format!(
            "equalized {:?} vs targets {:?}",
            equalized.shape(),
            targets.shape()
        )));
    }
    let m = equalized.ncols();
    if m <= order + 1 {
        return Err(Error::InvalidParameter(format!(
            "{m} training symbols cannot fit order {order}"
        )));
    }
    let streams = (0..equalized.nrows())
        .map(|n| {
            let z: Vec<f64> = equalized.row(n).iter().copied().collect();
            let t: Vec<f64> = targets.row(n).iter().copied().collect();
            fit_stream(&z, &t, order)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Postdistorter { order, streams })
}

fn fit_stream(z: &[f64], t: &[f64], order: usize) -> Result<StreamPolynomial> {
    let m = z.len() as f64;
    let center = z.iter().sum::<f64>() / m;
    let spread = z.iter().map(|v| (v - center).powi(2)).sum::<f64>() / m;
    if !(spread > 0.0) {
        return Err(Error::RankDeficient(
            "equalised stream is constant; cannot fit a postdistorter".into(),
        ));
    }
    let scale = spread.sqrt();
    let design = DMatrix::from_fn(z.len(), order + 1, |i, k| {
        ((z[i] - center) / scale).powi(k as i32)
    });
    let rhs = DVector::from_column_slice(t);
    let svd = design.svd(true, true);
    let eps = svd.singular_values.max() * RANK_TOL;
    let rank = svd.singular_values.iter().filter(|s| **s > eps).count();
    if rank < 2 {
        return Err(Error::RankDeficient(format!(
            "postdistorter design has rank {rank}"
        )));
    }
    let coeffs = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let mut poly = StreamPolynomial {
        center,
        scale,
        coeffs: coeffs.iter().copied().collect(),
        residual: 0.0,
    };
    poly.residual = z
        .iter()
        .zip(t)
        .map(|(v, target)| (poly.apply(*v) - target).powi(2))
        .sum::<f64>()
        / m;
    Ok(poly)
}

/// `x̃ = p(equalizer(r))`, or just the equaliser output without a postdistorter.
pub fn equalize_and_postdistort(
    equalizer: &LinearEqualizer,
    postdistorter: Option<&Postdistorter>,
    r: &DVector<f64>,
) -> Result<DVector<f64>> {
    let z = equalizer.apply(r)?;
    match postdistorter {
        Some(p) => p.apply(&z),
        None => Ok(z),
    }
}

pub fn equalize_and_postdistort_batch(
    equalizer: &LinearEqualizer,
    postdistorter: Option<&Postdistorter>,
    received: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let z = equalizer.apply_batch(received)?;
    match postdistorter {
        Some(p) => p.apply_batch(&z),
        None => Ok(z),
    }
}
