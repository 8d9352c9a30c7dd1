//! Trains dense and circulant ELM receivers on one 45 dB training frame,
//! round-trips the dense model through its text format and reports SER.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use vlc_elm::circulant::train_circulant_receiver;
use vlc_elm::elm::{train_receiver, ElmConfig, ElmModel, InputScaling};
use vlc_elm::frontend::{
    draw_symbol_frame, Link, LinkConfig, PamConstellation, PolynomialNonlinearity,
};
use vlc_elm::geometry::{build_channel_matrix, ChannelGeometry};
use vlc_elm::harness::count_errors;

fn main() -> vlc_elm::Result<()> {
    let constellation = PamConstellation::pam4();
    let link = Link::calibrated(LinkConfig {
        channel: build_channel_matrix(&ChannelGeometry::reference())?,
        nonlinearity: PolynomialNonlinearity::default_led(),
        constellation: constellation.clone(),
        snr_db: 45.0,
        seed: 7,
    })?;
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let training = link.training_set(1000, &mut rng)?;
    let config = ElmConfig {
        seed: 9,
        input_scaling: InputScaling::Standardize { gain: 0.02 },
        ..ElmConfig::default()
    };
    let elm = train_receiver(&training, &config)?;
    let celm = train_circulant_receiver(&training, &config)?;
    let reloaded = ElmModel::from_text(&elm.to_text())?;
    assert_eq!(reloaded, elm);

    let x = draw_symbol_frame(9, 20_000, &constellation, &mut rng);
    let r = link.transmit(&x, &mut rng)?;
    let n = x.len() as f64;
    for (name, soft) in [
        ("ELM", reloaded.infer_batch(&r)?),
        ("CELM", celm.infer_batch(&r)?),
    ] {
        let ser = count_errors(&soft, &x, &constellation)? as f64 / n;
        println!("{name:>5}: SER {ser:.3e}");
    }
    Ok(())
}
