//! Fits the LED polynomial to an I-V table (the built-in one by default).
//!
//! `cargo run --example fit_nonlinearity -- [iv.csv] [order]`

use vlc_elm::frontend::{fit_polynomial_iv, parse_iv_csv, DEFAULT_IV_TABLE, DEFAULT_ORDER};

fn main() -> vlc_elm::Result<()> {
    let mut args = std::env::args().skip(1);
    let text = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT_IV_TABLE.to_string(),
    };
    let order = args
        .next()
        .map_or(DEFAULT_ORDER, |s| s.parse().expect("order"));
    let samples = parse_iv_csv(&text)?;
    let model = fit_polynomial_iv(&samples, order)?;

    println!("order {order} coefficients a_1..a_{order}:");
    for (k, a) in model.coeffs().iter().enumerate() {
        println!("  a_{} = {a:+.6e}", k + 1);
    }
    let worst = samples
        .iter()
        .map(|&(v, i)| ((model.apply(v) - i) / i).abs())
        .fold(0.0, f64::max);
    println!(
        "max relative fit error {worst:.2e} over {} samples",
        samples.len()
    );
    println!(
        "monotone on [1.7, 2.0]: {}",
        model.is_strictly_increasing_on(1.7, 2.0, 1e-4)
    );
    Ok(())
}
