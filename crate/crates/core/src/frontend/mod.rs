//! Transmit side: PAM symbol frames, the LED nonlinearity and the AWGN link.

mod constellation;
mod link;
mod nonlinearity;

pub use constellation::{detect, PamConstellation};
pub use link::{
    calibrate_noise_variance, draw_symbol_frame, transmit_frame, Link, LinkConfig, TrainingSet,
};
pub use nonlinearity::{
    apply_led_nonlinearity, fit_polynomial_iv, parse_iv_csv, PolynomialNonlinearity,
    DEFAULT_IV_TABLE, DEFAULT_ORDER,
};
