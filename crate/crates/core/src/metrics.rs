//! Full-reference image quality measures.
//!
//! SSIM follows the original reference configuration: an 11×11 Gaussian
//! window with σ = 1.5, `K1 = 0.01`, `K2 = 0.03`, dynamic range 255, valid
//! (fully interior) window positions only, and the per-channel scores
//! averaged over R, G and B.

use crate::error::{argument, Result};
use crate::image_io::Image;

/// SSIM window and stabilizing constants.
#[derive(Clone, Debug, PartialEq)]
pub struct SsimParams {
    pub window_size: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
    window: Vec<f64>,
}

impl SsimParams {
    pub fn new(window_size: usize, sigma: f64, k1: f64, k2: f64, dynamic_range: f64) -> Self {
        let window = gaussian_window(window_size, sigma);
        SsimParams { window_size, sigma, k1, k2, dynamic_range, window }
    }

    pub fn c1(&self) -> f64 {
        (self.k1 * self.dynamic_range).powi(2)
    }

    pub fn c2(&self) -> f64 {
        (self.k2 * self.dynamic_range).powi(2)
    }

    /// Row-major normalized window weights.
    pub fn window(&self) -> &[f64] {
        &self.window
    }
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams::new(11, 1.5, 0.01, 0.03, 255.0)
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let center = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - center;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mut w: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

fn channel_ssim(a: &Image, b: &Image, channel: usize, p: &SsimParams) -> f64 {
    let (w, h, k) = (a.width(), a.height(), p.window_size);
    let (c1, c2) = (p.c1(), p.c2());
    let sa = a.data();
    let sb = b.data();
    let mut total = 0.0;
    for y0 in 0..=h - k {
        for x0 in 0..=w - k {
            let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..k {
                let row = 3 * ((y0 + dy) * w + x0) + channel;
                for dx in 0..k {
                    let wt = p.window[dy * k + dx];
                    let va = sa[row + 3 * dx] as f64;
                    let vb = sb[row + 3 * dx] as f64;
                    ma += wt * va;
                    mb += wt * vb;
                    aa += wt * va * va;
                    bb += wt * vb * vb;
                    ab += wt * va * vb;
                }
            }
            let var_a = aa - ma * ma;
            let var_b = bb - mb * mb;
            let cov = ab - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        }
    }
    total / ((w - k + 1) * (h - k + 1)) as f64
}

/// Mean SSIM over the three color channels.
pub fn ssim(a: &Image, b: &Image, p: &SsimParams) -> Result<f64> {
    a.check_same_dims(b)?;
    if a.width() < p.window_size || a.height() < p.window_size {
        return Err(argument(format!(
            "{}x{} image is smaller than the {}x{} SSIM window",
            a.width(),
            a.height(),
            p.window_size,
            p.window_size
        )));
    }
    Ok((0..3).map(|c| channel_ssim(a, b, c, p)).sum::<f64>() / 3.0)
}

/// Mean squared difference of raw 8-bit samples.
pub fn mse_image(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let mse = mse_image(a, b)?;
    Ok(if mse == 0.0 { f64::INFINITY } else { 10.0 * (255.0f64 * 255.0 / mse).log10() })
}
