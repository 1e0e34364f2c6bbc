//! Brute-force key-space sizes of the pixel cipher.

use num_bigint::BigUint;

use crate::cipher::EncryptionConfig;
use crate::error::{argument, Error, Result};
use crate::keygen::Keystream;

/// Largest pixel count for which [`enumerate_keystreams`] runs with shuffling.
pub const MAX_ENUM_PIXELS_SHUFFLE: usize = 3;
/// Largest pixel count for which [`enumerate_keystreams`] runs without shuffling.
pub const MAX_ENUM_PIXELS_NEGPOS: usize = 6;
/// Largest pixel count for [`keyspace_exact`].
pub const MAX_EXACT_PIXELS: usize = 64;

/// Key-space sizes in bits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeySpaceReport {
    pub n: u64,
    pub log2_np: f64,
    pub log2_col: f64,
    pub log2_total: f64,
}

impl KeySpaceReport {
    pub const CSV_HEADER: &'static str = "n,log2_np,log2_col,log2_total";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.n, self.log2_np, self.log2_col, self.log2_total)
    }
}

pub fn pixel_count(width: usize, height: usize) -> Result<u64> {
    if width == 0 || height == 0 {
        return Err(argument(format!("zero dimension {width}x{height}")));
    }
    Ok(width as u64 * height as u64)
}

/// `3n` bits for the flips plus `n·log2 6` bits when shuffling is enabled.
pub fn keyspace_bits(n: u64, cfg: EncryptionConfig) -> KeySpaceReport {
    let log2_np = 3.0 * n as f64;
    let log2_col = if cfg.use_color_shuffle { n as f64 * 6f64.log2() } else { 0.0 };
    KeySpaceReport { n, log2_np, log2_col, log2_total: log2_np + log2_col }
}

/// Exact key-space size `2^{3n}·6^n` (or `2^{3n}`) for `n ≤ 64`.
pub fn keyspace_exact(n: u64, cfg: EncryptionConfig) -> Result<BigUint> {
    if n == 0 || n > MAX_EXACT_PIXELS as u64 {
        return Err(argument(format!("exact key space supported for 1 ≤ n ≤ {MAX_EXACT_PIXELS}")));
    }
    let np = BigUint::from(1u8) << (3 * n as usize);
    Ok(if cfg.use_color_shuffle { np * BigUint::from(6u8).pow(n as u32) } else { np })
}

/// Every distinct keystream over `n` pixels, each exactly once.
pub fn enumerate_keystreams(n: usize, cfg: EncryptionConfig) -> Result<Vec<Keystream>> {
    let bound = if cfg.use_color_shuffle { MAX_ENUM_PIXELS_SHUFFLE } else { MAX_ENUM_PIXELS_NEGPOS };
    if n == 0 {
        return Err(argument("cannot enumerate keystreams over zero pixels"));
    }
    if n > bound {
        return Err(Error::Capacity(format!("n = {n} exceeds the enumeration bound {bound}")));
    }
    let per_pixel: usize = if cfg.use_color_shuffle { 48 } else { 8 };
    let total = per_pixel.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    for mut code in 0..total {
        let mut flips = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
        let mut shuffles = vec![0u8; n];
        for j in 0..n {
            let digit = code % per_pixel;
            code /= per_pixel;
            for (c, plane) in flips.iter_mut().enumerate() {
                plane[j] = ((digit >> c) & 1) as u8;
            }
            shuffles[j] = (digit >> 3) as u8;
        }
        out.push(Keystream::new(flips, shuffles)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn pixel_counts() {
        assert_eq!(pixel_count(96, 96).unwrap(), 9216);
        assert_eq!(pixel_count(1, 1).unwrap(), 1);
        assert_eq!(pixel_count(2, 3).unwrap(), 6);
        assert!(pixel_count(0, 3).is_err());
    }

    #[test]
    fn bits() {
        let r = keyspace_bits(1, EncryptionConfig::with_shuffle());
        assert!((r.log2_total - 48f64.log2()).abs() < 1e-12);
        assert_eq!(keyspace_bits(9216, EncryptionConfig::negpos_only()).log2_total, 27648.0);
        let big = keyspace_bits(9216, EncryptionConfig::with_shuffle());
        // 27648 + 9216·log2 6 = 51471.0144066...
        assert!((big.log2_total - 51_471.014_406_6).abs() < 1e-3);
        assert_eq!(big.log2_total, big.log2_np + big.log2_col);
    }

    #[test]
    fn enumeration_counts_and_distinctness() {
        let one = enumerate_keystreams(1, EncryptionConfig::with_shuffle()).unwrap();
        assert_eq!(one.len(), 48);
        assert_eq!(one.iter().collect::<HashSet<_>>().len(), 48);
        assert_eq!(enumerate_keystreams(1, EncryptionConfig::negpos_only()).unwrap().len(), 8);
        let two = enumerate_keystreams(2, EncryptionConfig::with_shuffle()).unwrap();
        assert_eq!(two.len(), 2304);
        assert_eq!(two.iter().collect::<HashSet<_>>().len(), 2304);
        assert!(enumerate_keystreams(0, EncryptionConfig::negpos_only()).is_err());
        assert!(matches!(enumerate_keystreams(4, EncryptionConfig::with_shuffle()), Err(Error::Capacity(_))));
        assert!(matches!(enumerate_keystreams(7, EncryptionConfig::negpos_only()), Err(Error::Capacity(_))));
    }

    #[test]
    fn exact_matches_bits() {
        for n in 1..=MAX_ENUM_PIXELS_NEGPOS {
            for cfg in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
                if cfg.use_color_shuffle && n > MAX_ENUM_PIXELS_SHUFFLE {
                    continue;
                }
                let count = enumerate_keystreams(n, cfg).unwrap().len();
                let bits = keyspace_bits(n as u64, cfg).log2_total;
                assert_eq!(count as f64, bits.exp2().round());
                assert_eq!(keyspace_exact(n as u64, cfg).unwrap(), BigUint::from(count));
            }
        }
        assert!(keyspace_exact(65, EncryptionConfig::negpos_only()).is_err());
        assert_eq!(keyspace_exact(64, EncryptionConfig::negpos_only()).unwrap().bits(), 193);
    }
}
