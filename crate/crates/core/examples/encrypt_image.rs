//! Encrypts an image with and without color shuffling and decrypts it again.
//!
//! ```text
//! cargo run --example encrypt_image -- [input.ppm] [output-dir]
//! ```
//! Without an input a procedural test image is used.

use std::path::PathBuf;

use pixelcrypt::cipher::{decrypt, encrypt, EncryptionConfig};
use pixelcrypt::image_io::{load_ppm, save_ppm};
use pixelcrypt::keygen::{derive_keystream, MasterKey};
use pixelcrypt::synth::synthetic_image;

fn main() -> pixelcrypt::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => load_ppm(path)?,
        None => synthetic_image(1, 0, 96)?,
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("pixelcrypt-encrypt"));
    std::fs::create_dir_all(&out)?;

    let master = MasterKey::new(0x5EED);
    let ks = derive_keystream(master, 0, img.width(), img.height())?;
    save_ppm(&img, out.join("plain.ppm"))?;
    for cfg in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
        let enc = encrypt(&img, &ks, cfg)?;
        let back = decrypt(&enc, &ks, cfg)?;
        assert_eq!(back, img);
        let name = format!("enc_step{}.ppm", cfg.steps_label().replace('+', "-"));
        save_ppm(&enc, out.join(&name))?;
        let changed = enc.data().iter().zip(img.data()).filter(|(a, b)| a != b).count();
        println!("steps {:<4} {changed} of {} samples changed, wrote {name}", cfg.steps_label(), img.data().len());
    }
    println!("output in {}", out.display());
    Ok(())
}
