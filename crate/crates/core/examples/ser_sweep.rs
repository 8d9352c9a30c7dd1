//! SER against SNR for every receiver on the reference scene.
//!
//! `cargo run --release --example ser_sweep -- [payload_symbols]`

use vlc_elm::harness::{run_ser_sweep, ExperimentConfig, ReceiverKind};

fn main() -> vlc_elm::Result<()> {
    let mut config = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        config.sweep.payload_symbols = n.parse().expect("payload symbols");
    }
    let report = run_ser_sweep(&config)?;

    print!("{:>8}", "SNR dB");
    for k in ReceiverKind::ALL {
        print!("{:>11}", k.name());
    }
    println!();
    for &snr in &config.sweep.snr_db {
        print!("{snr:>8}");
        for k in ReceiverKind::ALL {
            match report.record(k, snr) {
                Some(r) => print!("{:>11.3e}", r.ser),
                None => print!("{:>11}", "failed"),
            }
        }
        println!();
    }
    for f in &report.failures {
        eprintln!("{} at {} dB: {}", f.receiver, f.snr_db, f.message);
    }
    Ok(())
}
