//! Physical-layer simulator and receivers for LED MIMO visible-light links.
//!
//! The transmit chain is a line-of-sight Lambertian channel ([`geometry`]),
//! a memoryless polynomial LED nonlinearity driven by PAM levels and an
//! SNR-calibrated AWGN model ([`frontend`]). On the receive side the crate
//! provides:
//!
//! - a dense extreme learning machine receiver ([`elm`]),
//! - the same receiver with a partial-circulant input weight matrix whose
//!   matvec runs through the FFT ([`circulant`]),
//! - zero-forcing and LMMSE equalizers with an optional polynomial
//!   postdistorter ([`baselines`]),
//! - a seeded Monte-Carlo harness for SER sweeps and constellation dumps
//!   ([`harness`]).
//!
//! ```
//! use vlc_elm::circulant::complexity_report;
//!
//! let report = complexity_report(128, 64).unwrap();
//! assert_eq!(report.dense_mults, 8448);
//! assert_eq!(report.circulant_mults_rounded(), 2344);
//! ```

pub mod baselines;
pub mod circulant;
pub mod elm;
pub mod error;
pub mod frontend;
pub mod geometry;
pub mod harness;

pub use error::{Error, Result};
