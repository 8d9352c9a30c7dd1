//! Seeded Monte-Carlo evaluation.
//!
//! An [`ExperimentConfig`] describes the scene, the LED model, the receivers
//! and the SNR grid. [`run_ser_sweep`] trains every receiver at every SNR
//! point on a shared training frame and counts per-LED decision errors on a
//! shared payload; [`dump_constellation`] keeps the soft outputs instead.
//! Random streams are derived as described in [`seeds`].

pub mod config;
pub mod dump;
pub mod seeds;
pub mod sweep;

pub use config::{ExperimentConfig, Scenario};
pub use dump::{
    cluster_extremes, dump_constellation, dump_constellations, ClusterStats, ConstellationDump,
};
pub use seeds::{derive_seed, Purpose};
pub use sweep::{
    count_errors, evaluate_point, monotonicity_violations, prepare_point, run_ser_sweep, PointData,
    Receiver, ReceiverFailure, ReceiverKind, SerRecord, SweepReport,
};
