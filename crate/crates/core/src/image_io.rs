//! 8-bit RGB rasters plus binary PPM (P6) and STL-10 container codecs.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{argument, Error, Result};

/// Side length of an STL-10 image.
pub const STL10_SIDE: usize = 96;
/// Bytes per STL-10 record (3 planes of 96×96).
pub const STL10_RECORD_LEN: usize = 3 * STL10_SIDE * STL10_SIDE;

/// An 8-bit RGB image stored row-major with interleaved channels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(argument(format!("image dimensions must be positive, got {width}x{height}")));
        }
        let expected = 3 * width * height;
        if data.len() != expected {
            return Err(Error::Length { expected, actual: data.len() });
        }
        Ok(Image { width, height, data })
    }

    /// An image with every sample set to `value`.
    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Image::new(width, height, vec![value; 3 * width * height])
    }

    /// Builds an image from a per-pixel function of `(x, y)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut data = Vec::with_capacity(3 * width * height);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Image::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pixels, `width * height`.
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// RGB triple of the pixel with row-major index `j`.
    pub fn pixel(&self, j: usize) -> [u8; 3] {
        let s = &self.data[3 * j..3 * j + 3];
        [s[0], s[1], s[2]]
    }

    pub fn set_pixel(&mut self, j: usize, rgb: [u8; 3]) {
        self.data[3 * j..3 * j + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|s| [s[0], s[1], s[2]])
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &Image) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(argument(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format(format!("missing {what} in PPM header")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("{what} out of range in PPM header")))
    }
}

/// Decodes a binary P6 pixmap with maxval 255.
pub fn read_ppm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(Error::Format("missing P6 magic".into()));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!("zero dimension {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(Error::Format("missing whitespace after maxval".into())),
    }
    let expected = 3 * width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::Length { expected, actual: payload.len() });
    }
    Image::new(width, height, payload[..expected].to_vec())
}

/// Encodes `img` as `P6\n<w> <h>\n255\n` followed by the raw samples.
pub fn write_ppm(img: &Image) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.data.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.data);
    out
}

pub fn load_ppm(path: impl AsRef<Path>) -> Result<Image> {
    read_ppm(&fs::read(path)?)
}

pub fn save_ppm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_ppm(img))?;
    Ok(())
}

/// Decodes an STL-10 `*_X.bin` container.
///
/// Each record stores three planes (R, G, B); every plane is column-major.
/// Records are converted to the row-major interleaved layout of [`Image`].
pub fn read_stl10(bytes: &[u8]) -> Result<Vec<Image>> {
    read_stl10_limit(bytes, usize::MAX)
}

/// Like [`read_stl10`] but decodes at most `limit` records.
pub fn read_stl10_limit(bytes: &[u8], limit: usize) -> Result<Vec<Image>> {
    if !bytes.len().is_multiple_of(STL10_RECORD_LEN) {
        return Err(Error::Container(bytes.len()));
    }
    const PLANE: usize = STL10_SIDE * STL10_SIDE;
    bytes
        .chunks_exact(STL10_RECORD_LEN)
        .take(limit)
        .map(|record| {
            let mut data = vec![0u8; STL10_RECORD_LEN];
            for c in 0..3 {
                for col in 0..STL10_SIDE {
                    for row in 0..STL10_SIDE {
                        data[3 * (row * STL10_SIDE + col) + c] = record[c * PLANE + col * STL10_SIDE + row];
                    }
                }
            }
            Image::new(STL10_SIDE, STL10_SIDE, data)
        })
        .collect()
}

/// Returns the centered `size`×`size` sub-image.
pub fn center_crop(img: &Image, size: usize) -> Result<Image> {
    if size == 0 || size > img.width.min(img.height) {
        return Err(argument(format!("crop size {size} invalid for {}x{} image", img.width, img.height)));
    }
    let x0 = (img.width - size) / 2;
    let y0 = (img.height - size) / 2;
    let mut data = Vec::with_capacity(3 * size * size);
    for y in y0..y0 + size {
        let start = 3 * (y * img.width + x0);
        data.extend_from_slice(&img.data[start..start + 3 * size]);
    }
    Image::new(size, size, data)
}

/// Loads every `*.ppm` file in `dir`, sorted by file name.
pub fn load_ppm_dir(dir: impl AsRef<Path>, limit: usize) -> Result<Vec<Image>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")))
        .collect();
    paths.sort();
    paths.into_iter().take(limit).map(load_ppm).collect()
}

/// Loads images from either a directory of PPMs or an STL-10 `.bin` file.
pub fn load_images(path: impl AsRef<Path>, limit: usize) -> Result<Vec<Image>> {
    let path = path.as_ref();
    if path.is_dir() {
        load_ppm_dir(path, limit)
    } else {
        read_stl10_limit(&fs::read(path)?, limit)
    }
}
