use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::sweep::{
    chunk_layout, elm_config_for, payload_chunk, prepare_point, Receiver, ReceiverKind,
};
use crate::frontend::PamConstellation;
use crate::{Error, Result};

pub const DUMP_FORMAT: u32 = 1;

/// Soft receiver outputs paired with the transmitted symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationDump {
    pub receiver: String,
    pub snr_db: f64,
    /// `streams[n]` holds `(x̃, x)` for LED `n`.
    pub streams: Vec<Vec<(f64, f64)>>,
}

/// Soft values of all streams whose true symbol is `level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterStats {
    pub level: f64,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl ConstellationDump {
    pub fn num_streams(&self) -> usize {
        self.streams.len()
    }

    /// One cluster per constellation level, pooled over streams.
    pub fn cluster_stats(&self, constellation: &PamConstellation) -> Vec<ClusterStats> {
        constellation
            .levels()
            .iter()
            .map(|&level| {
                let vals: Vec<f64> = self
                    .streams
                    .iter()
                    .flatten()
                    .filter(|(_, x)| *x == level)
                    .map(|(s, _)| *s)
                    .collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                ClusterStats {
                    level,
                    count: vals.len(),
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# format={DUMP_FORMAT}\nreceiver,snr_db,stream,x_tilde,symbol\n");
        for (n, stream) in self.streams.iter().enumerate() {
            for (s, x) in stream {
                writeln!(out, "{},{},{n},{s:e},{x}", self.receiver, self.snr_db).unwrap();
            }
        }
        out
    }
}

/// Largest `|mean − level|` and largest std over the clusters.
pub fn cluster_extremes(stats: &[ClusterStats]) -> (f64, f64) {
    stats.iter().fold((0.0f64, 0.0f64), |(m, s), c| {
        (m.max((c.mean - c.level).abs()), s.max(c.std))
    })
}

/// Dumps for several receivers trained on the same frame and evaluated on
/// the first `n_symbols` payload symbols of the sweep at `snr_db`.
pub fn dump_constellations(
    config: &ExperimentConfig,
    receivers: &[ReceiverKind],
    snr_db: f64,
    n_symbols: usize,
) -> Result<Vec<Result<ConstellationDump>>> {
    if n_symbols == 0 {
        return Err(Error::InvalidParameter("need at least one symbol".into()));
    }
    let scenario = config.scenario()?;
    let point = prepare_point(config, &scenario, snr_db)?;
    let trained: Vec<Result<Receiver>> = receivers
        .iter()
        .map(|&kind| {
            let elm = elm_config_for(config, &scenario, kind, snr_db);
            Receiver::train(kind, &scenario, &point.link, &point.training, &elm)
        })
        .collect();

    let nt = point.link.num_leds();
    let mut dumps: Vec<Result<ConstellationDump>> = receivers
        .iter()
        .zip(trained.iter())
        .map(|(kind, rx)| match rx {
            Ok(_) => Ok(ConstellationDump {
                receiver: kind.name().to_string(),
                snr_db,
                streams: vec![Vec::with_capacity(n_symbols); nt],
            }),
            Err(e) => Err(Error::Config(format!("{kind}: {e}"))),
        })
        .collect();

    for (index, len) in chunk_layout(n_symbols, config.sweep.chunk_symbols) {
        let (x, r) = payload_chunk(config, &point, index, len)?;
        for (dump, rx) in dumps.iter_mut().zip(trained.iter()) {
            let (Ok(d), Ok(rx)) = (dump.as_mut(), rx.as_ref()) else {
                continue;
            };
            match rx.soft_batch(&r) {
                Ok(soft) => {
                    for j in 0..len {
                        for n in 0..nt {
                            d.streams[n].push((soft[(n, j)], x[(n, j)]));
                        }
                    }
                }
                Err(e) => *dump = Err(e),
            }
        }
    }
    Ok(dumps)
}

pub fn dump_constellation(
    config: &ExperimentConfig,
    receiver: ReceiverKind,
    snr_db: f64,
    n_symbols: usize,
) -> Result<ConstellationDump> {
    dump_constellations(config, &[receiver], snr_db, n_symbols)?
        .pop()
        .expect("one receiver requested")
}
