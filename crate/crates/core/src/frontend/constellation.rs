use nalgebra::DMatrix;
use rand::Rng;

use crate::{Error, Result};

/// Ascending, strictly positive PAM voltage levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PamConstellation {
    levels: Vec<f64>,
}

impl PamConstellation {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidParameter(
                "a constellation needs at least two levels".into(),
            ));
        }
        if levels.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::InvalidParameter(
                "levels must be finite and positive".into(),
            ));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "levels must be strictly ascending".into(),
            ));
        }
        Ok(Self { levels })
    }

    /// `order` equally spaced levels from `v_min` to `v_max` inclusive.
    pub fn uniform(order: usize, v_min: f64, v_max: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "PAM order must be at least 2, got {order}"
            )));
        }
        let step = (v_max - v_min) / (order - 1) as f64;
        Self::new((0..order).map(|j| v_min + step * j as f64).collect())
    }

    /// 4-PAM over 1.7..=2.0 V.
    pub fn pam4() -> Self {
        Self::new(vec![1.7, 1.8, 1.9, 2.0]).unwrap()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Mean of a uniformly drawn symbol.
    pub fn mean(&self) -> f64 {
        self.levels.iter().sum::<f64>() / self.len() as f64
    }

    /// Variance of a uniformly drawn symbol.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.levels.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// Nearest level. Decision regions are split at the midpoints between
    /// adjacent levels and a value exactly on a midpoint goes to the lower
    /// level.
    pub fn nearest(&self, x: f64) -> Result<f64> {
        self.nearest_index(x).map(|j| self.levels[j])
    }

    /// Index of the nearest level, same tie rule as [`nearest`](Self::nearest).
    pub fn nearest_index(&self, x: f64) -> Result<usize> {
        if !x.is_finite() {
            return Err(Error::Detection(format!("non-finite soft value {x}")));
        }
        let j = self
            .levels
            .windows(2)
            .position(|w| x <= 0.5 * (w[0] + w[1]))
            .unwrap_or(self.levels.len() - 1);
        Ok(j)
    }

    pub fn draw(&self, rng: &mut impl Rng) -> f64 {
        self.levels[rng.random_range(0..self.levels.len())]
    }

    pub fn draw_frame(&self, num_leds: usize, len: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        // column-major fill, one channel use after another
        DMatrix::from_fn(num_leds, len, |_, _| self.draw(rng))
    }
}

/// Per-element nearest-level decision.
pub fn detect(x_tilde: &[f64], constellation: &PamConstellation) -> Result<Vec<f64>> {
    x_tilde.iter().map(|&x| constellation.nearest(x)).collect()
}
