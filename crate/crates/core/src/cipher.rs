//! Pixel-based encryption: a keyed negative-positive transform of every
//! sample, optionally followed by a keyed permutation of each pixel's color
//! components.

use crate::error::{argument, Result};
use crate::image_io::Image;
use crate::keygen::Keystream;

/// Color permutations indexed by shuffle integer. Row `k` lists, for output
/// channel R, G, B, the input channel it is taken from.
pub const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2], // R G B
    [0, 2, 1], // R B G
    [1, 0, 2], // G R B
    [1, 2, 0], // G B R
    [2, 0, 1], // B R G
    [2, 1, 0], // B G R
];

/// Row of [`PERMUTATIONS`] that undoes row `k`.
pub const INVERSE_PERMUTATION: [usize; 6] = [0, 1, 2, 4, 3, 5];

/// Cipher settings. The bit depth is fixed at 8.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct EncryptionConfig {
    pub use_color_shuffle: bool,
}

impl EncryptionConfig {
    pub const BIT_DEPTH: u32 = 8;

    /// Negative-positive transform only.
    pub fn negpos_only() -> Self {
        EncryptionConfig { use_color_shuffle: false }
    }

    /// Negative-positive transform followed by color shuffling.
    pub fn with_shuffle() -> Self {
        EncryptionConfig { use_color_shuffle: true }
    }

    /// Short label for the cipher steps ("2" or "2+3").
    pub fn steps_label(&self) -> &'static str {
        if self.use_color_shuffle {
            "2+3"
        } else {
            "2"
        }
    }
}

const MAX_SAMPLE: u8 = ((1u16 << EncryptionConfig::BIT_DEPTH) - 1) as u8;

fn check_len(img: &Image, ks: &Keystream) -> Result<()> {
    if img.pixel_count() != ks.len() {
        return Err(argument(format!("keystream covers {} pixels but image has {}", ks.len(), img.pixel_count())));
    }
    Ok(())
}

/// Permutes one pixel with row `k` of [`PERMUTATIONS`].
pub fn permute_pixel(rgb: [u8; 3], k: usize) -> [u8; 3] {
    let p = PERMUTATIONS[k];
    [rgb[p[0]], rgb[p[1]], rgb[p[2]]]
}

/// Complements sample `c` of pixel `j` wherever `r_c(j) = 1`.
pub fn negpos_transform(img: &Image, ks: &Keystream) -> Result<Image> {
    check_len(img, ks)?;
    let mut data = img.data().to_vec();
    for (j, px) in data.chunks_exact_mut(3).enumerate() {
        for (c, p) in px.iter_mut().enumerate() {
            if ks.flip(c, j) == 1 {
                *p ^= MAX_SAMPLE;
            }
        }
    }
    Image::new(img.width(), img.height(), data)
}

fn map_pixels(img: &Image, ks: &Keystream, row: impl Fn(u8) -> usize) -> Result<Image> {
    check_len(img, ks)?;
    let mut out = img.clone();
    for j in 0..img.pixel_count() {
        out.set_pixel(j, permute_pixel(img.pixel(j), row(ks.shuffle(j))));
    }
    Ok(out)
}

/// Applies permutation `s(j)` to every pixel.
pub fn shuffle_colors(img: &Image, ks: &Keystream) -> Result<Image> {
    map_pixels(img, ks, |s| s as usize)
}

/// Undoes [`shuffle_colors`].
pub fn unshuffle_colors(img: &Image, ks: &Keystream) -> Result<Image> {
    map_pixels(img, ks, |s| INVERSE_PERMUTATION[s as usize])
}

pub fn encrypt(img: &Image, ks: &Keystream, cfg: EncryptionConfig) -> Result<Image> {
    let out = negpos_transform(img, ks)?;
    if cfg.use_color_shuffle {
        shuffle_colors(&out, ks)
    } else {
        Ok(out)
    }
}

/// Inverse of [`encrypt`]: unshuffle first, then undo the flips.
pub fn decrypt(img: &Image, ks: &Keystream, cfg: EncryptionConfig) -> Result<Image> {
    let out = if cfg.use_color_shuffle { unshuffle_colors(img, ks)? } else { img.clone() };
    negpos_transform(&out, ks)
}
