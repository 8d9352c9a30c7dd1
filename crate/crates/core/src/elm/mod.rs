//! Extreme learning machine receiver.
//!
//! A single hidden layer with random, fixed input weights and biases maps the
//! `N_r` photodiode outputs to `L` activations; only the `L × N_t` output
//! weights are learned, by ridge-regularised least squares against the
//! training symbols. Soft outputs are sliced to the nearest PAM level.
//!
//! [`Elm`] is generic over the [`HiddenLayer`] that computes `W r`. The dense
//! layer lives here; the FFT-backed circulant layer is in
//! [`crate::circulant`]. Both share training, inference and decisions.

pub mod model_io;
mod solver;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub use model_io::LayerCodec;
pub use solver::{train_output_weights, DEFAULT_RIDGE, PINV_CUTOFF};

pub use crate::frontend::detect;
use crate::frontend::{PamConstellation, TrainingSet};
use crate::{Error, Result};

/// Hidden-layer activation `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

/// Largest |z| passed to `exp` by the sigmoid.
const SIGMOID_CLAMP: f64 = 709.0;

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => {
                let z = z.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
                1.0 / (1.0 + (-z).exp())
            }
            Activation::Tanh => z.tanh(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidParameter(format!(
                "unknown activation {other:?}"
            ))),
        }
    }
}

/// How received vectors are conditioned before the hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InputScaling {
    /// Feed PD outputs straight into the hidden layer.
    #[default]
    None,
    /// Per-PD zero mean, with every PD divided by `gain⁻¹ ×` its training
    /// standard deviation.
    Standardize { gain: f64 },
}

/// Affine per-input map `z = (r - offset) ⊙ scale` fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub offset: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Normalizer {
    pub fn fit(received: &DMatrix<f64>, gain: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "standardisation gain must be positive, got {gain}"
            )));
        }
        let m = received.ncols() as f64;
        let offset = received.column_mean();
        let scale = DVector::from_iterator(
            received.nrows(),
            received.row_iter().zip(offset.iter()).map(|(row, mu)| {
                let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m;
                if var > 0.0 {
                    gain / var.sqrt()
                } else {
                    1.0
                }
            }),
        );
        Ok(Self { offset, scale })
    }

    pub fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        (r - &self.offset).component_mul(&self.scale)
    }

    pub fn apply_batch(&self, received: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = received.clone();
        for mut col in out.column_iter_mut() {
            col -= &self.offset;
            col.component_mul_assign(&self.scale);
        }
        out
    }
}

/// Computes the hidden pre-activation `W r` for some input weight structure.
pub trait HiddenLayer {
    fn input_size(&self) -> usize;
    fn hidden_size(&self) -> usize;
    fn project(&self, r: &DVector<f64>) -> Result<DVector<f64>>;

    /// Column-wise `W R`.
    fn project_batch(&self, received: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.hidden_size(), received.ncols());
        for (m, col) in received.column_iter().enumerate() {
            out.set_column(m, &self.project(&col.into_owned())?);
        }
        Ok(out)
    }
}

/// Unstructured `L × N_r` input weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: DMatrix<f64>,
}

impl DenseLayer {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Dimension("empty input weight matrix".into()));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }
}

impl HiddenLayer for DenseLayer {
    fn input_size(&self) -> usize {
        self.weights.ncols()
    }

    fn hidden_size(&self) -> usize {
        self.weights.nrows()
    }

    fn project(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        check_input(self.input_size(), r.len())?;
        Ok(&self.weights * r)
    }

    fn project_batch(&self, received: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_input(self.input_size(), received.nrows())?;
        Ok(&self.weights * received)
    }
}

pub(crate) fn check_input(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!(
            "expected {expected} inputs, got {got}"
        )));
    }
    Ok(())
}

/// i.i.d. uniform `[-1, 1]` draws, `W` row-major first and then `b`.
pub fn init_elm(hidden: usize, inputs: usize, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if hidden == 0 || inputs == 0 {
        return Err(Error::InvalidParameter(
            "hidden and input sizes must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(hidden, inputs);
    for i in 0..hidden {
        for j in 0..inputs {
            w[(i, j)] = rng.random_range(-1.0..=1.0);
        }
    }
    let b = DVector::from_fn(hidden, |_, _| rng.random_range(-1.0..=1.0));
    Ok((w, b))
}

/// `g(W r + b)`.
pub fn hidden_map(
    weights: &DMatrix<f64>,
    biases: &DVector<f64>,
    r: &DVector<f64>,
    activation: Activation,
) -> Result<DVector<f64>> {
    check_input(weights.ncols(), r.len())?;
    check_bias(weights.nrows(), biases.len())?;
    Ok((weights * r + biases).map(|z| activation.apply(z)))
}

fn check_bias(hidden: usize, got: usize) -> Result<()> {
    if hidden != got {
        return Err(Error::Dimension(format!(
            "{hidden} hidden nodes but {got} biases"
        )));
    }
    Ok(())
}

/// `M × L` hidden-layer output matrix; row `m` is the response to column `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenOutputMatrix {
    pub phi: DMatrix<f64>,
}

pub fn build_hidden_matrix(
    weights: &DMatrix<f64>,
    biases: &DVector<f64>,
    received: &DMatrix<f64>,
    activation: Activation,
) -> Result<HiddenOutputMatrix> {
    let layer = DenseLayer::new(weights.clone())?;
    hidden_matrix_with(&layer, biases, received, activation)
}

fn hidden_matrix_with<H: HiddenLayer>(
    layer: &H,
    biases: &DVector<f64>,
    received: &DMatrix<f64>,
    activation: Activation,
) -> Result<HiddenOutputMatrix> {
    if received.ncols() == 0 {
        return Err(Error::Dimension("no received vectors".into()));
    }
    check_bias(layer.hidden_size(), biases.len())?;
    let mut pre = layer.project_batch(received)?;
    for mut col in pre.column_iter_mut() {
        col += biases;
    }
    Ok(HiddenOutputMatrix {
        phi: pre.transpose().map(|z| activation.apply(z)),
    })
}

/// Training knobs shared by the dense and circulant receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElmConfig {
    pub hidden: usize,
    pub ridge: f64,
    pub seed: u64,
    pub activation: Activation,
    pub input_scaling: InputScaling,
}

impl Default for ElmConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            ridge: DEFAULT_RIDGE,
            seed: 0,
            activation: Activation::Sigmoid,
            input_scaling: InputScaling::None,
        }
    }
}

/// ELM with a pluggable input-weight structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Elm<H> {
    layer: H,
    biases: DVector<f64>,
    activation: Activation,
    normalizer: Option<Normalizer>,
    output_weights: Option<DMatrix<f64>>,
    seed: u64,
}

pub type ElmModel = Elm<DenseLayer>;

impl ElmModel {
    /// Untrained dense model with weights from [`init_elm`].
    pub fn init(hidden: usize, inputs: usize, seed: u64, activation: Activation) -> Result<Self> {
        let (w, b) = init_elm(hidden, inputs, seed)?;
        Elm::from_parts(DenseLayer::new(w)?, b, activation, seed)
    }

    pub fn input_weights(&self) -> &DMatrix<f64> {
        self.layer.weights()
    }
}

impl<H: HiddenLayer> Elm<H> {
    pub fn from_parts(
        layer: H,
        biases: DVector<f64>,
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        check_bias(layer.hidden_size(), biases.len())?;
        Ok(Self {
            layer,
            biases,
            activation,
            normalizer: None,
            output_weights: None,
            seed,
        })
    }

    pub fn layer(&self) -> &H {
        &self.layer
    }

    pub fn biases(&self) -> &DVector<f64> {
        &self.biases
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn hidden_size(&self) -> usize {
        self.layer.hidden_size()
    }

    pub fn input_size(&self) -> usize {
        self.layer.input_size()
    }

    pub fn normalizer(&self) -> Option<&Normalizer> {
        self.normalizer.as_ref()
    }

    pub fn set_normalizer(&mut self, normalizer: Option<Normalizer>) -> Result<()> {
        if let Some(n) = &normalizer {
            check_input(self.input_size(), n.offset.len())?;
            check_input(self.input_size(), n.scale.len())?;
        }
        self.normalizer = normalizer;
        Ok(())
    }

    /// `L × N_t` output weights `B`, column `n` is `β_n`.
    pub fn output_weights(&self) -> Option<&DMatrix<f64>> {
        self.output_weights.as_ref()
    }

    pub fn set_output_weights(&mut self, weights: DMatrix<f64>) -> Result<()> {
        if weights.nrows() != self.hidden_size() {
            return Err(Error::Dimension(format!(
                "output weights have {} rows for {} hidden nodes",
                weights.nrows(),
                self.hidden_size()
            )));
        }
        self.output_weights = Some(weights);
        Ok(())
    }

    pub fn is_trained(&self) -> bool {
        self.output_weights.is_some()
    }

    /// `g(W r + b)` after the optional input normalisation.
    pub fn hidden_map(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        check_input(self.input_size(), r.len())?;
        let pre = match &self.normalizer {
            Some(n) => self.layer.project(&n.apply(r))?,
            None => self.layer.project(r)?,
        };
        Ok((pre + &self.biases).map(|z| self.activation.apply(z)))
    }

    pub fn hidden_matrix(&self, received: &DMatrix<f64>) -> Result<HiddenOutputMatrix> {
        check_input(self.input_size(), received.nrows())?;
        match &self.normalizer {
            Some(n) => hidden_matrix_with(
                &self.layer,
                &self.biases,
                &n.apply_batch(received),
                self.activation,
            ),
            None => hidden_matrix_with(&self.layer, &self.biases, received, self.activation),
        }
    }

    /// Fits the output weights to `training`, optionally refitting the
    /// input normaliser first.
    pub fn fit(&mut self, training: &TrainingSet, ridge: f64, scaling: InputScaling) -> Result<()> {
        check_input(self.input_size(), training.received.nrows())?;
        self.normalizer = match scaling {
            InputScaling::None => None,
            InputScaling::Standardize { gain } => Some(Normalizer::fit(&training.received, gain)?),
        };
        let phi = self.hidden_matrix(&training.received)?;
        let b = train_output_weights(&phi.phi, &training.symbols, ridge)?;
        self.output_weights = Some(b);
        Ok(())
    }

    /// Soft estimate `x̃ = Bᵀ g(W r + b)`.
    pub fn infer(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        let b = self.output_weights.as_ref().ok_or(Error::Untrained)?;
        Ok(b.tr_mul(&self.hidden_map(r)?))
    }

    /// Soft estimates for every column of `received`, `N_t × M`.
    pub fn infer_batch(&self, received: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let b = self.output_weights.as_ref().ok_or(Error::Untrained)?;
        let phi = self.hidden_matrix(received)?;
        Ok(b.tr_mul(&phi.phi.transpose()))
    }

    pub fn detect(&self, r: &DVector<f64>, constellation: &PamConstellation) -> Result<Vec<f64>> {
        detect(self.infer(r)?.as_slice(), constellation)
    }
}

/// Soft estimate of a trained model, see [`Elm::infer`].
pub fn elm_infer<H: HiddenLayer>(model: &Elm<H>, r: &DVector<f64>) -> Result<DVector<f64>> {
    model.infer(r)
}

/// Draws a dense ELM from `config.seed` and fits it to `training`.
pub fn train_receiver(training: &TrainingSet, config: &ElmConfig) -> Result<ElmModel> {
    let mut model = ElmModel::init(
        config.hidden,
        training.received.nrows(),
        config.seed,
        config.activation,
    )?;
    model.fit(training, config.ridge, config.input_scaling)?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn sigmoid_oracle(z: f64) -> f64 {
        (0.5 * z).tanh() * 0.5 + 0.5
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let (w1, b1) = init_elm(128, 64, 77).unwrap();
        let (w2, b2) = init_elm(128, 64, 77).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(b1, b2);
        assert!(w1.iter().chain(b1.iter()).all(|v| (-1.0..=1.0).contains(v)));
        let (w3, _) = init_elm(128, 64, 78).unwrap();
        assert_ne!(w1, w3);
        assert!(init_elm(0, 3, 1).is_err());
    }

    #[test]
    fn init_mean_near_zero() {
        let (w, b) = init_elm(10_000, 1, 5).unwrap();
        assert!(w.mean().abs() < 0.05);
        assert!(b.mean().abs() < 0.05);
    }

    #[test]
    fn hidden_map_examples() {
        let h = hidden_map(
            &DMatrix::zeros(4, 3),
            &DVector::zeros(4),
            &DVector::from_vec(vec![1.0, 2.0, 3.0]),
            Activation::Sigmoid,
        )
        .unwrap();
        assert!(h.iter().all(|v| *v == 0.5));
        let h = hidden_map(
            &DMatrix::from_element(1, 1, 1.0),
            &DVector::zeros(1),
            &DVector::zeros(1),
            Activation::Sigmoid,
        )
        .unwrap();
        assert_eq!(h[0], 0.5);
        assert!(hidden_map(
            &DMatrix::zeros(4, 3),
            &DVector::zeros(4),
            &DVector::zeros(2),
            Activation::Sigmoid
        )
        .is_err());
    }

    #[test]
    fn hidden_map_matches_scalar_loop() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let w = random_matrix(7, 5, &mut rng);
        let b = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
        let r = DVector::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
        let h = hidden_map(&w, &b, &r, Activation::Sigmoid).unwrap();
        for i in 0..7 {
            let mut z = b[i];
            for j in 0..5 {
                z += w[(i, j)] * r[j];
            }
            assert!((h[i] - sigmoid_oracle(z)).abs() <= 1e-15);
        }
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        let g = Activation::Sigmoid;
        assert_eq!(g.apply(1e6), 1.0);
        assert_eq!(g.apply(-1e6), g.apply(-709.0));
        assert!(g.apply(-1e6) > 0.0);
        assert!(g.apply(f64::INFINITY).is_finite());
    }

    #[test]
    fn hidden_matrix_rows_and_permutation() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let w = random_matrix(3, 5, &mut rng);
        let b = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let r = random_matrix(5, 7, &mut rng);
        let phi = build_hidden_matrix(&w, &b, &r, Activation::Sigmoid)
            .unwrap()
            .phi;
        assert_eq!(phi.shape(), (7, 3));
        for m in 0..7 {
            let col = r.column(m).into_owned();
            let h = hidden_map(&w, &b, &col, Activation::Sigmoid).unwrap();
            for i in 0..3 {
                let mut z = b[i];
                for j in 0..5 {
                    z += w[(i, j)] * r[(j, m)];
                }
                assert!((phi[(m, i)] - sigmoid_oracle(z)).abs() <= 1e-15);
                assert!((phi[(m, i)] - h[i]).abs() <= 1e-15);
            }
        }
        let perm = [3, 0, 6, 1, 5, 2, 4];
        let rp = DMatrix::from_fn(5, 7, |j, m| r[(j, perm[m])]);
        let phip = build_hidden_matrix(&w, &b, &rp, Activation::Sigmoid)
            .unwrap()
            .phi;
        for m in 0..7 {
            assert_eq!(phip.row(m), phi.row(perm[m]));
        }
        assert!(build_hidden_matrix(&w, &b, &DMatrix::zeros(5, 0), Activation::Sigmoid).is_err());
    }

    #[test]
    fn infer_examples() {
        let mut model = ElmModel::init(4, 2, 1, Activation::Sigmoid).unwrap();
        let r = DVector::from_vec(vec![0.3, -0.2]);
        assert!(matches!(model.infer(&r), Err(Error::Untrained)));
        model.set_output_weights(DMatrix::zeros(4, 3)).unwrap();
        assert_eq!(model.infer(&r).unwrap(), DVector::zeros(3));

        let mut tiny = Elm::from_parts(
            DenseLayer::new(DMatrix::zeros(1, 1)).unwrap(),
            DVector::zeros(1),
            Activation::Sigmoid,
            0,
        )
        .unwrap();
        tiny.set_output_weights(DMatrix::from_element(1, 1, 2.0))
            .unwrap();
        assert_eq!(elm_infer(&tiny, &DVector::zeros(1)).unwrap()[0], 1.0);
    }

    #[test]
    fn infer_matches_scalar_loop() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let mut model = ElmModel::init(16, 6, 2, Activation::Sigmoid).unwrap();
        let beta = random_matrix(16, 3, &mut rng);
        model.set_output_weights(beta.clone()).unwrap();
        let r = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let x = model.infer(&r).unwrap();
        let w = model.input_weights();
        for n in 0..3 {
            let mut acc = 0.0;
            for i in 0..16 {
                let mut z = model.biases()[i];
                for j in 0..6 {
                    z += w[(i, j)] * r[j];
                }
                acc += beta[(i, n)] * sigmoid_oracle(z);
            }
            assert!((x[n] - acc).abs() <= 1e-13);
        }
        let batch = model
            .infer_batch(&DMatrix::from_column_slice(6, 1, r.as_slice()))
            .unwrap();
        assert!((batch.column(0) - &x).amax() <= 1e-13);
    }

    #[test]
    fn activation_names() {
        for a in [Activation::Sigmoid, Activation::Tanh] {
            assert_eq!(Activation::from_name(a.name()).unwrap(), a);
        }
        assert!(Activation::from_name("relu").is_err());
    }

    #[test]
    fn normalizer_standardizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let r = DMatrix::from_fn(3, 500, |i, _| {
            1e-5 * (i as f64 + 1.0) + 1e-7 * rng.random_range(-1.0..1.0)
        });
        let n = Normalizer::fit(&r, 0.5).unwrap();
        let z = n.apply_batch(&r);
        for row in z.row_iter() {
            let mean = row.mean();
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 500.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 0.5).abs() < 1e-9);
        }
        assert!(Normalizer::fit(&r, 0.0).is_err());
    }
}
