use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::{PamConstellation, PolynomialNonlinearity};
use crate::geometry::ChannelMatrix;
use crate::{Error, Result};

/// Number of noiseless probe symbols used for SNR calibration by default.
pub const DEFAULT_PROBE_SYMBOLS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub channel: ChannelMatrix,
    pub nonlinearity: PolynomialNonlinearity,
    pub constellation: PamConstellation,
    pub snr_db: f64,
    /// Seeds the noiseless probe frames used for calibration.
    pub seed: u64,
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "SNR must be finite, got {}",
                self.snr_db
            )));
        }
        Ok(())
    }
}

/// Training symbols `T` (`N_t × M`) and the matching PD outputs (`N_r × M`).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub symbols: DMatrix<f64>,
    pub received: DMatrix<f64>,
}

impl TrainingSet {
    pub fn new(symbols: DMatrix<f64>, received: DMatrix<f64>) -> Result<Self> {
        if symbols.ncols() != received.ncols() {
            return Err(Error::Dimension(format!(
                "{} training symbols but {} received vectors",
                symbols.ncols(),
                received.ncols()
            )));
        }
        if symbols.ncols() == 0 {
            return Err(Error::Dimension("empty training set".into()));
        }
        Ok(Self { symbols, received })
    }

    pub fn len(&self) -> usize {
        self.symbols.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// One row per channel use: `m,x_0..,r_0..`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# format=1\nm");
        for n in 0..self.symbols.nrows() {
            write!(out, ",x_{n}").unwrap();
        }
        for q in 0..self.received.nrows() {
            write!(out, ",r_{q}").unwrap();
        }
        out.push('\n');
        for m in 0..self.len() {
            write!(out, "{m}").unwrap();
            for v in self
                .symbols
                .column(m)
                .iter()
                .chain(self.received.column(m).iter())
            {
                write!(out, ",{v:.16e}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// I.i.d. uniform PAM symbols, `num_leds × len`.
pub fn draw_symbol_frame(
    num_leds: usize,
    len: usize,
    constellation: &PamConstellation,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    constellation.draw_frame(num_leds, len, rng)
}

fn noiseless(config: &LinkConfig, symbols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let h = config.channel.gains();
    if symbols.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "{} symbol streams for a channel with {} LEDs",
            symbols.nrows(),
            h.ncols()
        )));
    }
    Ok(h * config.nonlinearity.apply_matrix(symbols))
}

/// Noise variance that puts the mean received signal power per PD at
/// `snr_db` above the noise, from `probe_symbols` noiseless channel uses.
pub fn calibrate_noise_variance(link: &LinkConfig, probe_symbols: usize) -> Result<f64> {
    link.validate()?;
    if probe_symbols == 0 {
        return Err(Error::InvalidParameter(
            "need at least one probe symbol".into(),
        ));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(link.seed);
    let x = draw_symbol_frame(
        link.channel.num_leds(),
        probe_symbols,
        &link.constellation,
        &mut rng,
    );
    let clean = noiseless(link, &x)?;
    let power = clean.norm_squared() / clean.len() as f64;
    if !(power > 0.0) {
        return Err(Error::Calibration("received signal power is zero".into()));
    }
    Ok(power / 10f64.powf(link.snr_db / 10.0))
}

/// A link with its noise variance fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    config: LinkConfig,
    noise_variance: f64,
}

impl Link {
    pub fn calibrated(config: LinkConfig) -> Result<Self> {
        Self::calibrated_with(config, DEFAULT_PROBE_SYMBOLS)
    }

    pub fn calibrated_with(config: LinkConfig, probe_symbols: usize) -> Result<Self> {
        let noise_variance = calibrate_noise_variance(&config, probe_symbols)?;
        Ok(Self {
            config,
            noise_variance,
        })
    }

    pub fn with_noise_variance(config: LinkConfig, noise_variance: f64) -> Result<Self> {
        config.validate()?;
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and >= 0, got {noise_variance}"
            )));
        }
        Ok(Self {
            config,
            noise_variance,
        })
    }

    pub fn config(&self) -> &LinkConfig {
        &self.config
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn num_leds(&self) -> usize {
        self.config.channel.num_leds()
    }

    pub fn num_pds(&self) -> usize {
        self.config.channel.num_pds()
    }

    /// `H f(x)` without noise.
    pub fn noiseless(&self, symbols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        noiseless(&self.config, symbols)
    }

    /// `H f(x) + n`.
    pub fn transmit(&self, symbols: &DMatrix<f64>, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
        let mut r = self.noiseless(symbols)?;
        if self.noise_variance > 0.0 {
            let sigma = self.noise_variance.sqrt();
            for v in r.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
        Ok(r)
    }

    pub fn training_set(&self, len: usize, rng: &mut impl Rng) -> Result<TrainingSet> {
        let symbols = draw_symbol_frame(self.num_leds(), len, &self.config.constellation, rng);
        let received = self.transmit(&symbols, rng)?;
        TrainingSet::new(symbols, received)
    }
}

pub fn transmit_frame(
    symbols: &DMatrix<f64>,
    link: &Link,
    rng: &mut impl Rng,
) -> Result<DMatrix<f64>> {
    link.transmit(symbols, rng)
}
