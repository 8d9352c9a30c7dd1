use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::config::{ExperimentConfig, Scenario};
use super::seeds::{chunk_rng, derive_seed, point_rng, Purpose};
use crate::baselines::{
    build_lmmse, build_zf, equalize_and_postdistort_batch, fit_postdistorter, LinearEqualizer,
    Postdistorter,
};
use crate::circulant::{train_circulant_receiver, CirculantElmModel};
use crate::elm::{train_receiver, ElmConfig, ElmModel};
use crate::frontend::{draw_symbol_frame, Link, LinkConfig, PamConstellation, TrainingSet};
use crate::{Error, Result};

pub const SWEEP_FORMAT: u32 = 1;

/// Errors needed before an SER of at least this size is trusted.
pub const CONFIDENT_ERRORS: u64 = 100;
pub const CONFIDENCE_SER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceiverKind {
    Zf,
    Lmmse,
    ZfPd,
    LmmsePd,
    Elm,
    Celm,
}

impl ReceiverKind {
    pub const ALL: [ReceiverKind; 6] = [
        ReceiverKind::Zf,
        ReceiverKind::Lmmse,
        ReceiverKind::ZfPd,
        ReceiverKind::LmmsePd,
        ReceiverKind::Elm,
        ReceiverKind::Celm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReceiverKind::Zf => "ZF",
            ReceiverKind::Lmmse => "LMMSE",
            ReceiverKind::ZfPd => "ZF+PD",
            ReceiverKind::LmmsePd => "LMMSE+PD",
            ReceiverKind::Elm => "ELM",
            ReceiverKind::Celm => "CELM",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::Config(format!("unknown receiver {name:?}")))
    }
}

impl std::fmt::Display for ReceiverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A receiver trained for one SNR point.
#[derive(Debug, Clone)]
pub enum Receiver {
    Linear {
        equalizer: LinearEqualizer,
        postdistorter: Option<Postdistorter>,
    },
    Elm(ElmModel),
    Celm(CirculantElmModel),
}

impl Receiver {
    /// Builds `kind` from the link's exact channel (linear baselines) or the
    /// training set (postdistorter and ELMs).
    pub fn train(
        kind: ReceiverKind,
        scenario: &Scenario,
        link: &Link,
        training: &TrainingSet,
        elm: &ElmConfig,
    ) -> Result<Self> {
        let channel = &link.config().channel;
        let linear = |eq: LinearEqualizer, pd: bool| -> Result<Self> {
            let postdistorter = if pd {
                let z = eq.apply_batch(&training.received)?;
                Some(fit_postdistorter(
                    &z,
                    &training.symbols,
                    scenario.postdistorter_order,
                )?)
            } else {
                None
            };
            Ok(Receiver::Linear {
                equalizer: eq,
                postdistorter,
            })
        };
        let lmmse = || build_lmmse(channel, &scenario.constellation, link.noise_variance());
        match kind {
            ReceiverKind::Zf => linear(build_zf(channel)?, false),
            ReceiverKind::ZfPd => linear(build_zf(channel)?, true),
            ReceiverKind::Lmmse => linear(lmmse()?, false),
            ReceiverKind::LmmsePd => linear(lmmse()?, true),
            ReceiverKind::Elm => Ok(Receiver::Elm(train_receiver(training, elm)?)),
            ReceiverKind::Celm => Ok(Receiver::Celm(train_circulant_receiver(training, elm)?)),
        }
    }

    /// Pre-decision estimates `x̃` for every column of `received`.
    pub fn soft_batch(&self, received: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Receiver::Linear {
                equalizer,
                postdistorter,
            } => equalize_and_postdistort_batch(equalizer, postdistorter.as_ref(), received),
            Receiver::Elm(m) => m.infer_batch(received),
            Receiver::Celm(m) => m.infer_batch(received),
        }
    }
}

/// Calibrated link and shared training frame for one SNR point.
#[derive(Debug, Clone)]
pub struct PointData {
    pub snr_db: f64,
    pub link: Link,
    pub training: TrainingSet,
}

pub fn prepare_point(
    config: &ExperimentConfig,
    scenario: &Scenario,
    snr_db: f64,
) -> Result<PointData> {
    let master = config.master_seed;
    let link = Link::calibrated_with(
        LinkConfig {
            channel: scenario.channel.clone(),
            nonlinearity: scenario.nonlinearity.clone(),
            constellation: scenario.constellation.clone(),
            snr_db,
            seed: derive_seed(master, snr_db, Purpose::Probe),
        },
        config.sweep.probe_symbols,
    )?;
    let mut rng = point_rng(master, snr_db, Purpose::Training);
    let training = link.training_set(config.receivers.training_symbols, &mut rng)?;
    Ok(PointData {
        snr_db,
        link,
        training,
    })
}

/// ELM settings for one receiver at one point, with its derived weight seed.
pub fn elm_config_for(
    config: &ExperimentConfig,
    scenario: &Scenario,
    kind: ReceiverKind,
    snr_db: f64,
) -> ElmConfig {
    let purpose = match kind {
        ReceiverKind::Celm => Purpose::Celm,
        _ => Purpose::Elm,
    };
    ElmConfig {
        seed: derive_seed(config.master_seed, snr_db, purpose),
        ..scenario.elm
    }
}

/// Symbols and received samples of payload chunk `index`.
pub fn payload_chunk(
    config: &ExperimentConfig,
    point: &PointData,
    index: usize,
    len: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut rng = chunk_rng(config.master_seed, point.snr_db, index as u64);
    let x = draw_symbol_frame(
        point.link.num_leds(),
        len,
        &point.link.config().constellation,
        &mut rng,
    );
    let r = point.link.transmit(&x, &mut rng)?;
    Ok((x, r))
}

/// `(index, len)` of every payload chunk covering `total` symbols.
pub fn chunk_layout(total: usize, chunk: usize) -> Vec<(usize, usize)> {
    (0..total.div_ceil(chunk))
        .map(|i| (i, chunk.min(total - i * chunk)))
        .collect()
}

/// Per-LED decisions of `soft` that differ from `symbols`.
pub fn count_errors(
    soft: &DMatrix<f64>,
    symbols: &DMatrix<f64>,
    constellation: &PamConstellation,
) -> Result<u64> {
    if soft.shape() != symbols.shape() {
        return Err(Error::Dimension(format!(
            "estimates {:?} vs symbols {:?}",
            soft.shape(),
            symbols.shape()
        )));
    }
    let mut errors = 0;
    for (&s, &x) in soft.iter().zip(symbols.iter()) {
        if constellation.nearest(s)? != x {
            errors += 1;
        }
    }
    Ok(errors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerRecord {
    pub receiver: String,
    pub snr_db: f64,
    /// Per-LED decisions, `N_t` per channel use.
    pub symbols: u64,
    pub errors: u64,
    pub ser: f64,
    pub wall_time_s: f64,
}

impl SerRecord {
    pub fn new(
        receiver: &str,
        snr_db: f64,
        symbols: u64,
        errors: u64,
        wall_time_s: f64,
    ) -> Result<Self> {
        if symbols == 0 || errors > symbols {
            return Err(Error::InvalidParameter(format!(
                "{errors} errors over {symbols} symbols"
            )));
        }
        Ok(Self {
            receiver: receiver.to_string(),
            snr_db,
            symbols,
            errors,
            ser: errors as f64 / symbols as f64,
            wall_time_s,
        })
    }

    pub fn low_confidence(&self) -> bool {
        self.ser >= CONFIDENCE_SER && self.errors < CONFIDENT_ERRORS
    }

    pub fn flag(&self) -> &'static str {
        if self.low_confidence() {
            "low-confidence"
        } else {
            "ok"
        }
    }

    /// Binomial standard error of `ser`.
    pub fn standard_error(&self) -> f64 {
        (self.ser * (1.0 - self.ser) / self.symbols as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverFailure {
    pub receiver: String,
    pub snr_db: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub config_sha256: String,
    pub master_seed: u64,
    /// Ordered by receiver (config order), then SNR (grid order).
    pub records: Vec<SerRecord>,
    pub failures: Vec<ReceiverFailure>,
}

impl SweepReport {
    pub fn record(&self, receiver: ReceiverKind, snr_db: f64) -> Option<&SerRecord> {
        self.records
            .iter()
            .find(|r| r.receiver == receiver.name() && r.snr_db == snr_db)
    }

    /// CSV with `#` header lines. Wall times are written as zero unless
    /// `timing` is set, so repeated runs compare byte for byte.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::new();
        writeln!(out, "# format={SWEEP_FORMAT}").unwrap();
        writeln!(out, "# config_sha256={}", self.config_sha256).unwrap();
        writeln!(out, "# master_seed={}", self.master_seed).unwrap();
        for f in &self.failures {
            writeln!(
                out,
                "# failed receiver={} snr_db={}: {}",
                f.receiver, f.snr_db, f.message
            )
            .unwrap();
        }
        out.push_str("receiver,snr_db,symbols,errors,ser,wall_time_s,flag\n");
        for r in &self.records {
            let t = if timing { r.wall_time_s } else { 0.0 };
            writeln!(
                out,
                "{},{},{},{},{:e},{t:.3},{}",
                r.receiver,
                r.snr_db,
                r.symbols,
                r.errors,
                r.ser,
                r.flag()
            )
            .unwrap();
        }
        out
    }
}

/// Records for one SNR point, in `scenario.receivers` order.
pub fn evaluate_point(
    config: &ExperimentConfig,
    scenario: &Scenario,
    snr_db: f64,
) -> Result<(Vec<SerRecord>, Vec<ReceiverFailure>)> {
    let point = prepare_point(config, scenario, snr_db)?;
    let mut trained = Vec::new();
    let mut failures = Vec::new();
    for &kind in &scenario.receivers {
        let start = Instant::now();
        let elm = elm_config_for(config, scenario, kind, snr_db);
        match Receiver::train(kind, scenario, &point.link, &point.training, &elm) {
            Ok(rx) => trained.push((kind, rx, start.elapsed().as_secs_f64())),
            Err(e) => failures.push(ReceiverFailure {
                receiver: kind.name().to_string(),
                snr_db,
                message: e.to_string(),
            }),
        }
    }

    let layout = chunk_layout(config.sweep.payload_symbols, config.sweep.chunk_symbols);
    let per_chunk: Vec<Vec<Result<(u64, f64)>>> = layout
        .par_iter()
        .map(|&(index, len)| {
            let (x, r) = payload_chunk(config, &point, index, len)?;
            Ok(trained
                .iter()
                .map(|(_, rx, _)| {
                    let start = Instant::now();
                    let soft = rx.soft_batch(&r)?;
                    let errors = count_errors(&soft, &x, &scenario.constellation)?;
                    Ok((errors, start.elapsed().as_secs_f64()))
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let decisions = (config.sweep.payload_symbols * point.link.num_leds()) as u64;
    let mut records = Vec::new();
    for (i, (kind, _, train_time)) in trained.iter().enumerate() {
        let mut errors = 0;
        let mut time = *train_time;
        let mut failure = None;
        for chunk in &per_chunk {
            match &chunk[i] {
                Ok((e, t)) => {
                    errors += e;
                    time += t;
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        match failure {
            None => records.push(SerRecord::new(
                kind.name(),
                snr_db,
                decisions,
                errors,
                time,
            )?),
            Some(message) => failures.push(ReceiverFailure {
                receiver: kind.name().to_string(),
                snr_db,
                message,
            }),
        }
    }
    Ok((records, failures))
}

/// SER of every configured receiver at every SNR of the grid.
///
/// SNR points run in parallel; each derives its probe, training, payload and
/// weight streams from `master_seed`, and every receiver at a point sees the
/// same training and payload frames.
pub fn run_ser_sweep(config: &ExperimentConfig) -> Result<SweepReport> {
    let scenario = config.scenario()?;
    let points: Vec<(Vec<SerRecord>, Vec<ReceiverFailure>)> = config
        .sweep
        .snr_db
        .par_iter()
        .map(|&snr| evaluate_point(config, &scenario, snr))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for kind in &scenario.receivers {
        for (recs, fails) in &points {
            records.extend(recs.iter().filter(|r| r.receiver == kind.name()).cloned());
            failures.extend(fails.iter().filter(|f| f.receiver == kind.name()).cloned());
        }
    }
    Ok(SweepReport {
        config_sha256: config.sha256(),
        master_seed: config.master_seed,
        records,
        failures,
    })
}

/// Adjacent SNR pairs where SER rises by more than `sigmas` combined
/// standard errors, as `(receiver, lower snr, higher snr)`.
pub fn monotonicity_violations(records: &[SerRecord], sigmas: f64) -> Vec<(String, f64, f64)> {
    let mut names: Vec<&str> = records.iter().map(|r| r.receiver.as_str()).collect();
    names.dedup();
    let mut out = Vec::new();
    for name in names {
        let mut curve: Vec<&SerRecord> = records.iter().filter(|r| r.receiver == name).collect();
        curve.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        for w in curve.windows(2) {
            let se = (w[0].standard_error().powi(2) + w[1].standard_error().powi(2)).sqrt();
            if w[1].ser - w[0].ser > sigmas * se && w[1].ser > w[0].ser {
                out.push((name.to_string(), w[0].snr_db, w[1].snr_db));
            }
        }
    }
    out
}
