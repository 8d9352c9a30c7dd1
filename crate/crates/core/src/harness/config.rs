//! TOML experiment description.
//!
//! Every section is optional and falls back to the reference scene. A minimal
//! file is just `format = 1`.
//!
//! ```toml
//! format = 1
//! master_seed = 42
//!
//! [geometry]
//! room = [10.0, 10.0, 3.0]      # length, width, height in metres
//! led_grid = [3, 3]
//! led_spacing = 1.0
//! led_height = 3.0
//! pd_grid = [8, 8]
//! pd_spacing = 0.5
//! pd_height = 0.85
//!
//! [channel]
//! # optional: load H from a CSV written by `vlcsim channel`, ignoring
//! # the geometry and optics sections
//! matrix = "h.csv"
//!
//! [optics]
//! lambertian_order = 1.0
//! fov_deg = 62.0
//! concentrator_index = 1.5
//! pd_area = 1e-4                # m^2
//!
//! [nonlinearity]
//! # at most one of iv_table / coefficients; neither means the built-in table
//! iv_table = "led_iv.csv"
//! order = 5
//!
//! [constellation]
//! levels = 4
//! v_min = 1.7
//! v_max = 2.0
//!
//! [receivers]
//! run = ["ZF", "LMMSE", "ZF+PD", "LMMSE+PD", "ELM", "CELM"]
//! hidden = 128
//! ridge = 1e-6
//! training_symbols = 1000
//! activation = "sigmoid"
//! standardize_inputs = true
//! input_gain = 0.02
//! postdistorter_order = 5
//!
//! [sweep]
//! snr_db = [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
//! payload_symbols = 100000
//! probe_symbols = 10000
//! chunk_symbols = 10000
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sweep::ReceiverKind;
use crate::baselines::DEFAULT_POSTDISTORTER_ORDER;
use crate::elm::{Activation, ElmConfig, InputScaling, DEFAULT_RIDGE};
use crate::frontend::{
    fit_polynomial_iv, parse_iv_csv, PamConstellation, PolynomialNonlinearity, DEFAULT_ORDER,
};
use crate::geometry::{build_channel_matrix, ChannelGeometry, ChannelMatrix, OpticalParams, Room};
use crate::{Error, Result};

pub const CONFIG_FORMAT: u32 = 1;
pub const MIN_PAYLOAD_SYMBOLS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format: u32,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default, skip_serializing_if = "ChannelSection::is_default")]
    pub channel: ChannelSection,
    #[serde(default)]
    pub optics: OpticsSection,
    #[serde(default)]
    pub nonlinearity: NonlinearitySection,
    #[serde(default)]
    pub constellation: ConstellationSection,
    #[serde(default)]
    pub receivers: ReceiverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub room: [f64; 3],
    pub led_grid: [usize; 2],
    pub led_spacing: f64,
    pub led_height: f64,
    pub pd_grid: [usize; 2],
    pub pd_spacing: f64,
    pub pd_height: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            room: [10.0, 10.0, 3.0],
            led_grid: [3, 3],
            led_spacing: 1.0,
            led_height: 3.0,
            pd_grid: [8, 8],
            pd_spacing: 0.5,
            pd_height: 0.85,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
}

impl ChannelSection {
    fn is_default(&self) -> bool {
        self.matrix.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub lambertian_order: f64,
    pub fov_deg: f64,
    pub concentrator_index: f64,
    pub pd_area: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        let p = OpticalParams::reference();
        Self {
            lambertian_order: p.lambda_order,
            fov_deg: p.phi_c.to_degrees(),
            concentrator_index: p.gamma,
            pd_area: p.a_pd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iv_table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<PathBuf>,
    pub order: usize,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self {
            iv_table: None,
            coefficients: None,
            order: DEFAULT_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstellationSection {
    pub levels: usize,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for ConstellationSection {
    fn default() -> Self {
        Self {
            levels: 4,
            v_min: 1.7,
            v_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    pub run: Vec<String>,
    pub hidden: usize,
    pub ridge: f64,
    pub training_symbols: usize,
    pub activation: String,
    pub standardize_inputs: bool,
    pub input_gain: f64,
    pub postdistorter_order: usize,
}

pub const DEFAULT_INPUT_GAIN: f64 = 0.02;

impl Default for ReceiverSection {
    fn default() -> Self {
        Self {
            run: ReceiverKind::ALL
                .iter()
                .map(|k| k.name().to_string())
                .collect(),
            hidden: 128,
            ridge: DEFAULT_RIDGE,
            training_symbols: 1000,
            activation: Activation::Sigmoid.name().to_string(),
            standardize_inputs: true,
            input_gain: DEFAULT_INPUT_GAIN,
            postdistorter_order: DEFAULT_POSTDISTORTER_ORDER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    pub payload_symbols: usize,
    pub probe_symbols: usize,
    pub chunk_symbols: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: (0..7).map(|i| 20.0 + 5.0 * i as f64).collect(),
            payload_symbols: 100_000,
            probe_symbols: 10_000,
            chunk_symbols: 10_000,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            format: CONFIG_FORMAT,
            master_seed: default_seed(),
            geometry: GeometrySection::default(),
            channel: ChannelSection::default(),
            optics: OpticsSection::default(),
            nonlinearity: NonlinearitySection::default(),
            constellation: ConstellationSection::default(),
            receivers: ReceiverSection::default(),
            sweep: SweepSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Everything a sweep needs, built once from a validated config.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub channel: ChannelMatrix,
    pub nonlinearity: PolynomialNonlinearity,
    pub constellation: PamConstellation,
    pub receivers: Vec<ReceiverKind>,
    pub elm: ElmConfig,
    pub postdistorter_order: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.base_dir = base_dir.into();
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical TOML form, as lowercase hex.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn resolve_path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.format != CONFIG_FORMAT {
            return bad(format!("unsupported config format {}", self.format));
        }
        if self.sweep.snr_db.is_empty() {
            return bad("sweep.snr_db is empty".into());
        }
        if let Some(s) = self.sweep.snr_db.iter().find(|s| !s.is_finite()) {
            return bad(format!("non-finite SNR {s}"));
        }
        if self.sweep.payload_symbols < MIN_PAYLOAD_SYMBOLS {
            return bad(format!(
                "payload_symbols must be >= {MIN_PAYLOAD_SYMBOLS}, got {}",
                self.sweep.payload_symbols
            ));
        }
        if self.sweep.probe_symbols == 0 || self.sweep.chunk_symbols == 0 {
            return bad("probe_symbols and chunk_symbols must be positive".into());
        }
        if self.receivers.training_symbols == 0 {
            return bad("training_symbols must be positive".into());
        }
        if self.receivers.run.is_empty() {
            return bad("receivers.run is empty".into());
        }
        if self.nonlinearity.iv_table.is_some() && self.nonlinearity.coefficients.is_some() {
            return bad("give either nonlinearity.iv_table or nonlinearity.coefficients".into());
        }
        for p in [
            &self.nonlinearity.iv_table,
            &self.nonlinearity.coefficients,
            &self.channel.matrix,
        ]
        .into_iter()
        .flatten()
        {
            let full = self.resolve_path(p);
            if !full.is_file() {
                return bad(format!("file not found: {}", full.display()));
            }
        }
        if self.receivers.standardize_inputs && !(self.receivers.input_gain > 0.0) {
            return bad(format!(
                "input_gain must be > 0, got {}",
                self.receivers.input_gain
            ));
        }
        self.receiver_kinds()?;
        Activation::from_name(&self.receivers.activation)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn receiver_kinds(&self) -> Result<Vec<ReceiverKind>> {
        let mut kinds = Vec::new();
        for name in &self.receivers.run {
            let k = ReceiverKind::from_name(name)?;
            if kinds.contains(&k) {
                return Err(Error::Config(format!("receiver {name} listed twice")));
            }
            kinds.push(k);
        }
        Ok(kinds)
    }

    pub fn channel_geometry(&self) -> Result<ChannelGeometry> {
        let g = &self.geometry;
        let o = &self.optics;
        let room = Room {
            length: g.room[0],
            width: g.room[1],
            height: g.room[2],
        };
        let params = OpticalParams {
            lambda_order: o.lambertian_order,
            phi_c: o.fov_deg.to_radians(),
            gamma: o.concentrator_index,
            a_pd: o.pd_area,
        };
        let leds = room.centered_grid(g.led_grid[0], g.led_grid[1], g.led_spacing, g.led_height);
        let pds = room.centered_grid(g.pd_grid[0], g.pd_grid[1], g.pd_spacing, g.pd_height);
        ChannelGeometry::new(leds, pds, params)
    }

    pub fn channel(&self) -> Result<ChannelMatrix> {
        match &self.channel.matrix {
            Some(p) => ChannelMatrix::from_csv(&std::fs::read_to_string(self.resolve_path(p))?),
            None => build_channel_matrix(&self.channel_geometry()?),
        }
    }

    pub fn load_nonlinearity(&self) -> Result<PolynomialNonlinearity> {
        let n = &self.nonlinearity;
        if let Some(p) = &n.coefficients {
            return PolynomialNonlinearity::from_text(&std::fs::read_to_string(
                self.resolve_path(p),
            )?);
        }
        match &n.iv_table {
            Some(p) => {
                let samples = parse_iv_csv(&std::fs::read_to_string(self.resolve_path(p))?)?;
                fit_polynomial_iv(&samples, n.order)
            }
            None if n.order == DEFAULT_ORDER => Ok(PolynomialNonlinearity::default_led()),
            None => fit_polynomial_iv(&parse_iv_csv(crate::frontend::DEFAULT_IV_TABLE)?, n.order),
        }
    }

    pub fn elm_config(&self) -> Result<ElmConfig> {
        let r = &self.receivers;
        Ok(ElmConfig {
            hidden: r.hidden,
            ridge: r.ridge,
            seed: 0,
            activation: Activation::from_name(&r.activation)?,
            input_scaling: if r.standardize_inputs {
                InputScaling::Standardize { gain: r.input_gain }
            } else {
                InputScaling::None
            },
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let c = &self.constellation;
        Ok(Scenario {
            channel: self.channel()?,
            nonlinearity: self.load_nonlinearity()?,
            constellation: PamConstellation::uniform(c.levels, c.v_min, c.v_max)?,
            receivers: self.receiver_kinds()?,
            elm: self.elm_config()?,
            postdistorter_order: self.receivers.postdistorter_order,
        })
    }
}
