//! Cluster statistics of the soft outputs at 45 dB, all receivers on the
//! same frames.
//!
//! `cargo run --release --example constellation -- [csv_dir]` also writes one
//! scatter CSV per receiver.

use vlc_elm::frontend::PamConstellation;
use vlc_elm::harness::{dump_constellations, ExperimentConfig, ReceiverKind};

fn main() -> vlc_elm::Result<()> {
    let out_dir = std::env::args().nth(1);
    let config = ExperimentConfig::default();
    let levels = PamConstellation::pam4();
    let dumps = dump_constellations(&config, &ReceiverKind::ALL, 45.0, 5000)?;
    for (kind, dump) in ReceiverKind::ALL.iter().zip(dumps) {
        let dump = dump?;
        println!("{kind}");
        for c in dump.cluster_stats(&levels) {
            println!(
                "  level {:.1}: mean {:.4} std {:.4} ({} points)",
                c.level, c.mean, c.std, c.count
            );
        }
        if let Some(dir) = &out_dir {
            let name = kind.name().replace('+', "_").to_lowercase();
            std::fs::write(format!("{dir}/{name}.csv"), dump.to_csv())?;
        }
    }
    Ok(())
}
