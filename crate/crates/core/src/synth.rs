//! Procedural natural-looking RGB images for hermetic experiments.
//!
//! Each image is a smooth two-color gradient background, a handful of
//! overlapping ellipses and rectangles, a low-frequency value-noise texture
//! and fine per-sample grain. Everything is drawn from SplitMix64, so image
//! `i` of seed `s` is identical on every platform.

use crate::error::{argument, Result};
use crate::image_io::Image;
use crate::keygen::SplitMix64;

fn color(rng: &mut SplitMix64) -> [f64; 3] {
    [rng.next_f64() * 255.0, rng.next_f64() * 255.0, rng.next_f64() * 255.0]
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Bilinearly interpolated lattice noise in `[-1, 1]`.
struct ValueNoise {
    cell: f64,
    cols: usize,
    grid: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut SplitMix64, size: usize, cell: f64) -> Self {
        let cols = (size as f64 / cell).ceil() as usize + 2;
        let grid = (0..cols * cols).map(|_| 2.0 * rng.next_f64() - 1.0).collect();
        ValueNoise { cell, cols, grid }
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        let fx = x as f64 / self.cell;
        let fy = y as f64 / self.cell;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - ix as f64, fy - iy as f64);
        let g = |cx: usize, cy: usize| self.grid[cy * self.cols + cx];
        let top = lerp(g(ix, iy), g(ix + 1, iy), tx);
        let bottom = lerp(g(ix, iy + 1), g(ix + 1, iy + 1), tx);
        lerp(top, bottom, ty)
    }
}

enum Shape {
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Ellipse { cx, cy, rx, ry } => ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0,
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x <= x1 && y >= y0 && y <= y1,
        }
    }
}

/// Square image `index` of the corpus identified by `seed`.
pub fn synthetic_image(seed: u64, index: u64, size: usize) -> Result<Image> {
    if size == 0 {
        return Err(argument("synthetic image size must be positive"));
    }
    let mut rng = SplitMix64::derived(seed, index);
    let s = size as f64;

    let (c0, c1) = (color(&mut rng), color(&mut rng));
    let angle = rng.next_f64() * std::f64::consts::TAU;
    let (dx, dy) = (angle.cos(), angle.sin());

    let shape_count = 3 + rng.next_below(5) as usize;
    let shapes: Vec<(Shape, [f64; 3])> = (0..shape_count)
        .map(|_| {
            let shape = if rng.next_below(2) == 0 {
                Shape::Ellipse {
                    cx: rng.next_f64() * s,
                    cy: rng.next_f64() * s,
                    rx: s * (0.08 + 0.3 * rng.next_f64()),
                    ry: s * (0.08 + 0.3 * rng.next_f64()),
                }
            } else {
                let (x0, y0) = (rng.next_f64() * s, rng.next_f64() * s);
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + s * (0.1 + 0.4 * rng.next_f64()),
                    y1: y0 + s * (0.1 + 0.4 * rng.next_f64()),
                }
            };
            (shape, color(&mut rng))
        })
        .collect();

    let texture_amp = 30.0 + 40.0 * rng.next_f64();
    let tint = [0.6 + 0.4 * rng.next_f64(), 0.6 + 0.4 * rng.next_f64(), 0.6 + 0.4 * rng.next_f64()];
    let cell = 1.5 + 3.0 * rng.next_f64();
    let noise = ValueNoise::new(&mut rng, size, cell);
    let grain = 10.0 + 15.0 * rng.next_f64();

    Image::from_fn(size, size, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        let t = (((fx / s - 0.5) * dx + (fy / s - 0.5) * dy) + 0.5).clamp(0.0, 1.0);
        let mut rgb = [lerp(c0[0], c1[0], t), lerp(c0[1], c1[1], t), lerp(c0[2], c1[2], t)];
        for (shape, c) in &shapes {
            if shape.contains(fx, fy) {
                rgb = *c;
            }
        }
        let n = noise.at(x, y) * texture_amp;
        let mut out = [0u8; 3];
        for c in 0..3 {
            let g = (2.0 * rng.next_f64() - 1.0) * grain;
            out[c] = (rgb[c] + n * tint[c] + g).clamp(0.0, 255.0).round() as u8;
        }
        out
    })
}

/// Images `first..first + count` of the corpus.
pub fn synthetic_images(seed: u64, first: u64, count: usize, size: usize) -> Result<Vec<Image>> {
    (0..count as u64).map(|i| synthetic_image(seed, first + i, size)).collect()
}
