//! Image-quality metrics between a plaintext image and its encryptions.
//!
//! ```text
//! cargo run --example ssim_compare -- [a.ppm b.ppm]
//! ```

use pixelcrypt::cipher::{encrypt, EncryptionConfig};
use pixelcrypt::image_io::load_ppm;
use pixelcrypt::keygen::{derive_keystream, MasterKey};
use pixelcrypt::metrics::{mse_image, psnr, ssim, SsimParams};
use pixelcrypt::synth::synthetic_image;
use pixelcrypt::Image;

fn row(label: &str, a: &Image, b: &Image, p: &SsimParams) -> pixelcrypt::Result<()> {
    println!("{label:<22} ssim {:>8.5}  mse {:>9.2}  psnr {:>6.2}", ssim(a, b, p)?, mse_image(a, b)?, psnr(a, b)?);
    Ok(())
}

fn main() -> pixelcrypt::Result<()> {
    let p = SsimParams::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [a, b] = args.as_slice() {
        return row("a vs b", &load_ppm(a)?, &load_ppm(b)?, &p);
    }
    let img = synthetic_image(5, 0, 64)?;
    let ks = derive_keystream(MasterKey::new(1), 0, 64, 64)?;
    row("identical", &img, &img, &p)?;
    row("negative-positive", &img, &encrypt(&img, &ks, EncryptionConfig::negpos_only())?, &p)?;
    row("with color shuffle", &img, &encrypt(&img, &ks, EncryptionConfig::with_shuffle())?, &p)?;
    row("flat gray", &img, &Image::filled(64, 64, 128)?, &p)?;
    row("constant 100 vs 155", &Image::filled(16, 16, 100)?, &Image::filled(16, 16, 155)?, &p)?;
    Ok(())
}
