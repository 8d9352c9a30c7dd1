//! Multiplications per soft output for dense and circulant hidden layers.

use vlc_elm::circulant::complexity_report;

fn main() -> vlc_elm::Result<()> {
    print!("{}", complexity_report(128, 64)?.to_table());
    println!();
    println!(
        "{:>6} {:>6} {:>10} {:>10} {:>7}",
        "L", "N_r", "dense", "circulant", "ratio"
    );
    for log_l in 4..=12 {
        let l = 1usize << log_l;
        let r = complexity_report(l, l / 2)?;
        println!(
            "{:>6} {:>6} {:>10} {:>10} {:>7.2}",
            l,
            l / 2,
            r.dense_mults,
            r.circulant_mults_rounded(),
            r.ratio()
        );
    }
    Ok(())
}
