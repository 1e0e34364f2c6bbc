//! Trains the reconstruction network against same-key and per-image-key
//! encryption on small procedural images and compares the results.
//!
//! ```text
//! cargo run --release --example train_attack
//! ```

use pixelcrypt::attack::{init_network, reconstruct, train, ArchConfig, LrScaling, TrainConfig};
use pixelcrypt::cipher::EncryptionConfig;
use pixelcrypt::harness::{assign_key_indices, encrypt_dataset, score_reconstructions};
use pixelcrypt::image_io::center_crop;
use pixelcrypt::keygen::{KeyPolicy, MasterKey};
use pixelcrypt::synth::synthetic_images;
use pixelcrypt::Image;

fn main() -> pixelcrypt::Result<()> {
    let size = 16;
    let crop = |imgs: Vec<Image>| imgs.iter().map(|i| center_crop(i, size)).collect::<pixelcrypt::Result<Vec<_>>>();
    let train_plain = crop(synthetic_images(9, 0, 150, 24)?)?;
    let test_plain = crop(synthetic_images(9, 150, 30, 24)?)?;
    let cfg = TrainConfig {
        epochs: 20,
        base_lr: 0.01,
        lr_drop_epochs: vec![12, 17],
        batch_size: 1,
        lr_scaling: LrScaling::PerPixel,
        ..TrainConfig::reference()
    };
    let master = MasterKey::new(7);
    let cipher = EncryptionConfig::with_shuffle();

    for policy in [KeyPolicy::SameKey, KeyPolicy::PerImageKeys] {
        let (train_idx, test_idx) = assign_key_indices(master, policy, train_plain.len(), test_plain.len());
        let train_enc = encrypt_dataset(&train_plain, &train_idx, master, cipher)?;
        let test_enc = encrypt_dataset(&test_plain, &test_idx, master, cipher)?;
        let pairs: Vec<(Image, Image)> = train_enc.into_iter().zip(train_plain.iter().cloned()).collect();

        let net = init_network(size, size, ArchConfig::reference(), cfg.seed)?;
        let (net, history) = train(net, &pairs, &cfg)?;
        let recon = test_enc.iter().map(|e| reconstruct(&net, e)).collect::<pixelcrypt::Result<Vec<_>>>()?;
        let (ssim, mse, psnr) = score_reconstructions(&test_plain, &recon)?;
        println!(
            "{:<9} loss {:.2e} -> {:.2e}   test ssim {ssim:.4}  mse {mse:.1}  psnr {psnr:.2} dB",
            policy.name(),
            history[0],
            history[history.len() - 1]
        );
    }
    Ok(())
}
