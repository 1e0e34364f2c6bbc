//! Brute-force key-space sizes for common image sizes, and an exhaustive
//! check on a single pixel.

use std::collections::HashSet;

use pixelcrypt::cipher::{encrypt, EncryptionConfig};
use pixelcrypt::keyspace::{enumerate_keystreams, keyspace_bits, keyspace_exact, KeySpaceReport};
use pixelcrypt::Image;

fn main() -> pixelcrypt::Result<()> {
    println!("{},shuffle", KeySpaceReport::CSV_HEADER);
    for side in [1u64, 2, 8, 32, 96, 224] {
        for cfg in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
            println!("{},{}", keyspace_bits(side * side, cfg).csv_row(), cfg.use_color_shuffle);
        }
    }
    println!("exact, 2x2 with shuffle: {}", keyspace_exact(4, EncryptionConfig::with_shuffle())?);

    let cfg = EncryptionConfig::with_shuffle();
    let pixel = Image::new(1, 1, vec![10, 60, 200])?;
    let keys = enumerate_keystreams(1, cfg)?;
    let outputs: HashSet<[u8; 3]> =
        keys.iter().map(|ks| encrypt(&pixel, ks, cfg).map(|e| e.pixel(0))).collect::<Result<_, _>>()?;
    println!("pixel (10, 60, 200): {} keys, {} distinct ciphertexts", keys.len(), outputs.len());
    Ok(())
}
