//! Builds the exact inverse of a same-key cipher as attack-network weights
//! and shows it reconstructs every encrypted image perfectly.

use pixelcrypt::attack::{construct_inversion_network, forward, loss_mse, reconstruct, ArchConfig};
use pixelcrypt::cipher::{encrypt, EncryptionConfig};
use pixelcrypt::keygen::{derive_keystream, MasterKey};
use pixelcrypt::synth::synthetic_images;

fn main() -> pixelcrypt::Result<()> {
    let size = 32;
    let images = synthetic_images(3, 0, 8, size)?;
    let ks = derive_keystream(MasterKey::new(42), 0, size, size)?;
    for cfg in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
        let net = construct_inversion_network(size, size, ArchConfig::reference(), &ks, cfg)?;
        let mut worst = 0.0f64;
        let mut exact = 0;
        for img in &images {
            let enc = encrypt(img, &ks, cfg)?;
            worst = worst.max(loss_mse(forward(&net, &enc)?.output(), img)?);
            exact += usize::from(reconstruct(&net, &enc)? == *img);
        }
        println!(
            "steps {:<4} {} parameters, max loss {worst:.1e}, {exact}/{} exact reconstructions",
            cfg.steps_label(),
            net.param_count(),
            images.len()
        );
    }
    Ok(())
}
