//! ZF and LMMSE with exact channel knowledge, with and without the
//! polynomial postdistorter.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vlc_elm::baselines::{
    build_lmmse, build_zf, equalize_and_postdistort_batch, fit_postdistorter,
};
use vlc_elm::frontend::{
    draw_symbol_frame, Link, LinkConfig, PamConstellation, PolynomialNonlinearity,
};
use vlc_elm::geometry::{build_channel_matrix, ChannelGeometry};
use vlc_elm::harness::count_errors;

fn main() -> vlc_elm::Result<()> {
    let constellation = PamConstellation::pam4();
    let channel = build_channel_matrix(&ChannelGeometry::reference())?;
    let link = Link::calibrated(LinkConfig {
        channel: channel.clone(),
        nonlinearity: PolynomialNonlinearity::default_led(),
        constellation: constellation.clone(),
        snr_db: 45.0,
        seed: 7,
    })?;
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let training = link.training_set(1000, &mut rng)?;
    let x = draw_symbol_frame(9, 20_000, &constellation, &mut rng);
    let r = link.transmit(&x, &mut rng)?;

    let equalizers = [
        ("ZF", build_zf(&channel)?),
        (
            "LMMSE",
            build_lmmse(&channel, &constellation, link.noise_variance())?,
        ),
    ];
    for (name, eq) in &equalizers {
        let pd = fit_postdistorter(&eq.apply_batch(&training.received)?, &training.symbols, 5)?;
        for (label, post) in [("", None), ("+PD", Some(&pd))] {
            let soft = equalize_and_postdistort_batch(eq, post, &r)?;
            let ser = count_errors(&soft, &x, &constellation)? as f64 / x.len() as f64;
            println!("{:>9}: SER {ser:.3e}", format!("{name}{label}"));
        }
    }
    Ok(())
}
