//! Low-complexity ELM with a partial-circulant input weight matrix.
//!
//! The `L × N_r` input weights are the first `N_r` columns of an `L × L`
//! circulant `W̃`. Zero-padding `r` to length `L` gives `W r = W̃ r̃`, and
//! since the unitary DFT `F` diagonalises every circulant,
//!
//! ```text
//! W̃ r̃ = Fᴴ D F r̃ = Fᴴ (d ⊙ F r̃),    d = √L · F w̃
//! ```
//!
//! which costs two length-`L` FFTs instead of `L · N_r` multiplications.
//!
//! Convention: the stored generator `w̃` is the first *column* of `W̃`, i.e.
//! `W̃[i][j] = w̃[(i - j) mod L]`. That is the orientation for which the
//! diagonalisation above holds exactly with `F(ξ,ζ) = L^{-1/2} e^{-2πiξζ/L}`.

use std::fmt::{self, Write as _};
use std::sync::Arc;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::elm::model_io::{write_array, ModelFields};
use crate::elm::{check_input, Elm, ElmConfig, HiddenLayer, LayerCodec};
use crate::frontend::TrainingSet;
use crate::{Error, Result};

/// Imaginary residue allowed after the inverse FFT, relative to the output.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

fn check_power_of_two(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "FFT length {len} is not a power of two"
        )));
    }
    Ok(())
}

fn unitary_in_place(buf: &mut [Complex64], inverse: bool) -> Result<()> {
    check_power_of_two(buf.len())?;
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

/// Unitary DFT, `(F v)[ξ] = L^{-1/2} Σ_ζ v[ζ] e^{-2πiξζ/L}`.
pub fn fft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut buf = v.to_vec();
    unitary_in_place(&mut buf, false)?;
    Ok(buf)
}

/// Inverse of [`fft`], i.e. `Fᴴ v`.
pub fn ifft(v: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut buf = v.to_vec();
    unitary_in_place(&mut buf, true)?;
    Ok(buf)
}

pub fn fft_real(v: &[f64]) -> Result<Vec<Complex64>> {
    let buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(&buf)
}

/// `d = √L · F w̃`.
pub fn circulant_spectrum(generator: &[f64]) -> Result<Vec<Complex64>> {
    let s = (generator.len() as f64).sqrt();
    Ok(fft_real(generator)?.into_iter().map(|c| c * s).collect())
}

/// Inverse of [`circulant_spectrum`]; returns the real part.
pub fn generator_from_spectrum(spectrum: &[Complex64]) -> Result<Vec<f64>> {
    let s = 1.0 / (spectrum.len() as f64).sqrt();
    Ok(ifft(spectrum)?.into_iter().map(|c| c.re * s).collect())
}

/// Partial-circulant input weights applied through FFTs.
#[derive(Clone)]
pub struct CirculantLayer {
    generator: Vec<f64>,
    spectrum: Vec<Complex64>,
    inputs: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for CirculantLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantLayer")
            .field("hidden", &self.generator.len())
            .field("inputs", &self.inputs)
            .field("generator", &self.generator)
            .finish_non_exhaustive()
    }
}

impl PartialEq for CirculantLayer {
    fn eq(&self, other: &Self) -> bool {
        self.inputs == other.inputs && self.generator == other.generator
    }
}

impl CirculantLayer {
    pub fn from_generator(generator: Vec<f64>, inputs: usize) -> Result<Self> {
        let hidden = generator.len();
        check_power_of_two(hidden)?;
        if inputs == 0 || hidden <= inputs {
            return Err(Error::InvalidParameter(format!(
                "circulant layer needs L > N_r >= 1, got L = {hidden}, N_r = {inputs}"
            )));
        }
        if generator.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidParameter("non-finite generator".into()));
        }
        let spectrum = circulant_spectrum(&generator)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(hidden),
            inverse: planner.plan_fft_inverse(hidden),
            generator,
            spectrum,
            inputs,
        })
    }

    /// First column of the `L × L` circulant.
    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// `Re(Fᴴ (d ⊙ F r̃))` with `r̃` the zero-padded input.
    pub fn matvec(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_input(self.inputs, r.len())?;
        let l = self.generator.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); l];
        for (b, &x) in buf.iter_mut().zip(r) {
            b.re = x;
        }
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        self.forward.process_with_scratch(&mut buf, &mut scratch);
        // unitary F on both sides: 1/√L · 1/√L
        let norm = 1.0 / l as f64;
        for (b, d) in buf.iter_mut().zip(&self.spectrum) {
            *b *= d * norm;
        }
        scratch.resize(
            self.inverse.get_inplace_scratch_len(),
            Complex64::new(0.0, 0.0),
        );
        self.inverse.process_with_scratch(&mut buf, &mut scratch);

        let out: Vec<f64> = buf.iter().map(|c| c.re).collect();
        let imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
        let out_max = out.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let in_max = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let gen_max = self.generator.iter().map(|v| v.abs()).fold(0.0, f64::max);
        // inputs that nearly cancel give a tiny output; bound by the input scale too
        let bound = IMAG_RESIDUE_TOL * out_max.max(in_max * gen_max);
        if imag > bound {
            return Err(Error::Consistency(format!(
                "imaginary residue {imag:e} exceeds {bound:e}"
            )));
        }
        Ok(out)
    }
}

impl HiddenLayer for CirculantLayer {
    fn input_size(&self) -> usize {
        self.inputs
    }

    fn hidden_size(&self) -> usize {
        self.generator.len()
    }

    fn project(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.matvec(r.as_slice())?))
    }
}

impl LayerCodec for CirculantLayer {
    const VARIANT: &'static str = "circulant";

    fn write_params(&self, out: &mut String) {
        write_array(out, "generator", &self.generator);
    }

    fn read_params(fields: &ModelFields, hidden: usize, inputs: usize) -> Result<Self> {
        CirculantLayer::from_generator(fields.array("generator", hidden)?.to_vec(), inputs)
    }
}

pub type CirculantElmModel = Elm<CirculantLayer>;

/// Untrained circulant model: `L` generator draws then `L` bias draws, all
/// uniform on `[-1, 1]`.
pub fn init_circulant(hidden: usize, inputs: usize, seed: u64) -> Result<CirculantElmModel> {
    init_circulant_with(hidden, inputs, seed, Default::default())
}

pub fn init_circulant_with(
    hidden: usize,
    inputs: usize,
    seed: u64,
    activation: crate::elm::Activation,
) -> Result<CirculantElmModel> {
    check_power_of_two(hidden)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let generator: Vec<f64> = (0..hidden).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let biases = DVector::from_fn(hidden, |_, _| rng.random_range(-1.0..=1.0));
    let layer = CirculantLayer::from_generator(generator, inputs)?;
    Elm::from_parts(layer, biases, activation, seed)
}

/// `Re(Fᴴ (d ⊙ F r̃))`, see [`CirculantLayer::matvec`].
pub fn circulant_matvec(model: &CirculantElmModel, r: &[f64]) -> Result<Vec<f64>> {
    model.layer().matvec(r)
}

/// `g(W r + b)` through the FFT path.
pub fn circulant_hidden_map(model: &CirculantElmModel, r: &DVector<f64>) -> Result<DVector<f64>> {
    model.hidden_map(r)
}

/// Circulant counterpart of [`crate::elm::train_receiver`].
pub fn train_circulant_receiver(
    training: &TrainingSet,
    config: &ElmConfig,
) -> Result<CirculantElmModel> {
    let mut model = init_circulant_with(
        config.hidden,
        training.received.nrows(),
        config.seed,
        config.activation,
    )?;
    model.fit(training, config.ridge, config.input_scaling)?;
    Ok(model)
}

/// Real multiplications needed for one soft output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityReport {
    pub hidden: usize,
    pub inputs: usize,
    /// `L·N_r + 2L`.
    pub dense_mults: u64,
    /// Nine times the split-radix count, kept as an integer so the value is exact.
    pub circulant_mults_ninths: i64,
    /// Multiplications counted while running a dense forward pass.
    pub measured_dense_mults: u64,
}

impl ComplexityReport {
    /// `(8/3) L log₂L − (4/9) L + 12 + (4/9)(−1)^{log₂L}`.
    pub fn circulant_mults(&self) -> f64 {
        self.circulant_mults_ninths as f64 / 9.0
    }

    pub fn circulant_mults_rounded(&self) -> u64 {
        let n = self.circulant_mults_ninths;
        ((n + 4).div_euclid(9)) as u64
    }

    pub fn ratio(&self) -> f64 {
        self.dense_mults as f64 / self.circulant_mults()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "L = {}, N_r = {}", self.hidden, self.inputs).unwrap();
        writeln!(
            out,
            "{:<16} {:>16} {:>10}",
            "receiver", "multiplications", "relative"
        )
        .unwrap();
        writeln!(
            out,
            "{:<16} {:>16} {:>10.2}",
            "dense-elm",
            self.dense_mults,
            self.ratio()
        )
        .unwrap();
        writeln!(
            out,
            "{:<16} {:>16} {:>10.2}",
            "circulant-elm",
            self.circulant_mults_rounded(),
            1.0
        )
        .unwrap();
        writeln!(
            out,
            "{:<16} {:>16} {:>10.2}",
            "dense-measured",
            self.measured_dense_mults,
            self.measured_dense_mults as f64 / self.circulant_mults()
        )
        .unwrap();
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("# format=1\n");
        writeln!(out, "# hidden={} inputs={}", self.hidden, self.inputs).unwrap();
        out.push_str("receiver,multiplications,relative\n");
        writeln!(out, "dense-elm,{},{:.6}", self.dense_mults, self.ratio()).unwrap();
        writeln!(out, "circulant-elm,{:.6},1.000000", self.circulant_mults()).unwrap();
        writeln!(
            out,
            "dense-measured,{},{:.6}",
            self.measured_dense_mults,
            self.measured_dense_mults as f64 / self.circulant_mults()
        )
        .unwrap();
        out
    }
}

/// Runs `x̃ = βᵀ g(W r + b)` for one output with explicit loops and counts
/// every real multiplication.
fn count_dense_forward_mults(hidden: usize, inputs: usize) -> u64 {
    let mut count = 0u64;
    let mut mul = |a: f64, b: f64| {
        count += 1;
        a * b
    };
    let mut out = 0.0;
    for i in 0..hidden {
        let mut z = 0.5;
        for j in 0..inputs {
            z += mul((i + j) as f64 * 1e-3, 1.0);
        }
        out += mul(0.5, 1.0 / (1.0 + (-z).exp()));
    }
    std::hint::black_box(out);
    count
}

pub fn complexity_report(hidden: usize, inputs: usize) -> Result<ComplexityReport> {
    check_power_of_two(hidden)?;
    if hidden < 2 || inputs == 0 {
        return Err(Error::InvalidParameter(format!(
            "complexity needs L >= 2 and N_r >= 1, got L = {hidden}, N_r = {inputs}"
        )));
    }
    let log_l = hidden.trailing_zeros() as i64;
    let l = hidden as i64;
    let sign = if log_l % 2 == 0 { 1 } else { -1 };
    let circulant_mults_ninths = 24 * l * log_l - 4 * l + 108 + 4 * sign;
    Ok(ComplexityReport {
        hidden,
        inputs,
        dense_mults: (hidden * inputs + 2 * hidden) as u64,
        circulant_mults_ninths,
        measured_dense_mults: count_dense_forward_mults(hidden, inputs),
    })
}
