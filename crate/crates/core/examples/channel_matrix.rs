//! Builds the reference channel and prints a summary followed by the CSV.

use vlc_elm::geometry::{build_channel_matrix, ChannelGeometry};

fn main() -> vlc_elm::Result<()> {
    let geometry = ChannelGeometry::reference();
    let h = build_channel_matrix(&geometry)?;
    let g = h.gains();
    let sv = g.clone().svd(false, false).singular_values;
    println!("{} PDs x {} LEDs", h.num_pds(), h.num_leds());
    println!("gain range {:.3e} .. {:.3e}", g.min(), g.max());
    println!(
        "singular values {:.3e} .. {:.3e}, condition {:.1}",
        sv.min(),
        sv.max(),
        sv.max() / sv.min()
    );
    print!("{}", h.to_csv());
    Ok(())
}
