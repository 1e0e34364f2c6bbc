//! Learned reconstruction attack.
//!
//! The network is a stack of three 1×1 locally connected layers: every pixel
//! owns an independent 3→m1→m2→3 multilayer perceptron (relu after the first
//! two layers, linear output) and no weight is shared across pixels. The
//! network maps an encrypted image, normalized to `[0, 1]`, to an estimate of
//! the normalized plaintext and is trained with minibatch SGD with momentum
//! on mean squared error.

mod oracle;
mod pixel;
mod serialize;

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{argument, Error, Result};
use crate::image_io::Image;
use crate::keygen::SplitMix64;

pub use oracle::construct_inversion_network;
pub use serialize::{load_network, read_network, save_network, write_network, NETWORK_MAGIC};

use pixel::{Layout, Scratch};

/// Feature-map counts of the three locally connected layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ArchConfig {
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
}

impl ArchConfig {
    pub fn new(m1: usize, m2: usize, m3: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(argument("hidden layer widths must be positive"));
        }
        if m3 != 3 {
            return Err(argument(format!("output layer must have 3 feature maps, got {m3}")));
        }
        Ok(ArchConfig { m1, m2, m3 })
    }

    /// 8 → 32 → 3 feature maps.
    pub fn reference() -> Self {
        ArchConfig { m1: 8, m2: 32, m3: 3 }
    }

    /// Number of parameters owned by one pixel.
    pub fn params_per_pixel(&self) -> usize {
        self.m1 * 3 + self.m1 + self.m2 * self.m1 + self.m2 + 3 * self.m2 + 3
    }
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::reference()
    }
}

/// How the learning rate relates to each pixel network's gradient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum LrScaling {
    /// Gradients are those of the whole-image MSE, so each pixel network
    /// sees its own error scaled by `1 / pixel_count`.
    #[default]
    Global,
    /// Each pixel network descends its own per-pixel MSE (mean over the
    /// three channels). Equivalent to multiplying the error gradient by the
    /// pixel count while leaving weight decay unchanged.
    PerPixel,
}

impl std::str::FromStr for LrScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "global" => Ok(LrScaling::Global),
            "per-pixel" => Ok(LrScaling::PerPixel),
            other => Err(argument(format!("unknown lr scaling {other:?} (expected global|per-pixel)"))),
        }
    }
}

impl std::fmt::Display for LrScaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LrScaling::Global => "global",
            LrScaling::PerPixel => "per-pixel",
        })
    }
}

/// Optimizer and schedule settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub lr_drop_epochs: Vec<usize>,
    pub lr_drop_factor: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub lr_scaling: LrScaling,
}

impl TrainConfig {
    /// 70 epochs, lr 0.1 dropped ×0.1 at epochs 40 and 60, momentum 0.9,
    /// weight decay 5e-4, batch 128, whole-image MSE gradients.
    pub fn reference() -> Self {
        TrainConfig {
            epochs: 70,
            base_lr: 0.1,
            lr_drop_epochs: vec![40, 60],
            lr_drop_factor: 0.1,
            momentum: 0.9,
            weight_decay: 0.0005,
            batch_size: 128,
            seed: 0,
            lr_scaling: LrScaling::Global,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(argument("epochs and batch size must be positive"));
        }
        if !(self.base_lr >= 0.0 && self.lr_drop_factor > 0.0) {
            return Err(argument("learning rate must be non-negative and drop factor positive"));
        }
        if self.momentum < 0.0 || self.weight_decay < 0.0 {
            return Err(argument("momentum and weight decay must be non-negative"));
        }
        if let Some(&e) = self.lr_drop_epochs.iter().find(|&&e| e >= self.epochs) {
            return Err(argument(format!("lr drop epoch {e} is not below epochs = {}", self.epochs)));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::reference()
    }
}

static NEXT_NETWORK_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NETWORK_ID.fetch_add(1, Ordering::Relaxed)
}

/// Per-pixel weight banks plus momentum buffers.
#[derive(Debug)]
pub struct AttackNetwork {
    width: usize,
    height: usize,
    arch: ArchConfig,
    params: Vec<f64>,
    velocity: Vec<f64>,
    // identifies the parameter state a ForwardCache was computed from
    id: u64,
    version: u64,
}

impl Clone for AttackNetwork {
    fn clone(&self) -> Self {
        AttackNetwork {
            params: self.params.clone(),
            velocity: self.velocity.clone(),
            id: fresh_id(),
            version: 0,
            ..*self
        }
    }
}

impl PartialEq for AttackNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.arch == other.arch
            && self.params == other.params
            && self.velocity == other.velocity
    }
}

impl AttackNetwork {
    /// A network with every parameter and momentum entry set to zero.
    pub fn zeros(width: usize, height: usize, arch: ArchConfig) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(argument(format!("zero-area network {width}x{height}")));
        }
        let len = width * height * arch.params_per_pixel();
        Ok(AttackNetwork {
            width,
            height,
            arch,
            params: vec![0.0; len],
            velocity: vec![0.0; len],
            id: fresh_id(),
            version: 0,
        })
    }

    pub(crate) fn from_params(width: usize, height: usize, arch: ArchConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = AttackNetwork::zeros(width, height, arch)?;
        if params.len() != net.params.len() {
            return Err(Error::Length { expected: net.params.len(), actual: params.len() });
        }
        net.params = params;
        Ok(net)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn arch(&self) -> ArchConfig {
        self.arch
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Total number of trainable parameters.
    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Mutable access to all parameters. Invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    /// Parameters owned by pixel `j`.
    pub fn pixel_params(&self, j: usize) -> &[f64] {
        let p = self.arch.params_per_pixel();
        &self.params[j * p..(j + 1) * p]
    }

    pub fn pixel_params_mut(&mut self, j: usize) -> &mut [f64] {
        self.version += 1;
        let p = self.arch.params_per_pixel();
        &mut self.params[j * p..(j + 1) * p]
    }

    fn check_image(&self, img: &Image) -> Result<()> {
        if img.width() != self.width || img.height() != self.height {
            return Err(argument(format!(
                "image is {}x{} but network expects {}x{}",
                img.width(),
                img.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}

/// Uniform fan-in initialization with zero biases.
///
/// Layer `l` of pixel `j` draws its weights row-major from
/// `SplitMix64::derived(seed, 3 * j + l)`, each uniform in
/// `[-√(6/fan_in), √(6/fan_in)]`.
pub fn init_network(width: usize, height: usize, arch: ArchConfig, seed: u64) -> Result<AttackNetwork> {
    let mut net = AttackNetwork::zeros(width, height, arch)?;
    let l = Layout::new(arch);
    let blocks = [(l.w1, l.m1 * 3, 3), (l.w2, l.m2 * l.m1, l.m1), (l.w3, 3 * l.m2, l.m2)];
    net.params.par_chunks_mut(l.total).enumerate().for_each(|(j, p)| {
        for (layer, &(start, len, fan_in)) in blocks.iter().enumerate() {
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut rng = SplitMix64::derived(seed, 3 * j as u64 + layer as u64);
            for w in &mut p[start..start + len] {
                *w = bound * (2.0 * rng.next_f64() - 1.0);
            }
        }
    });
    Ok(net)
}

/// Activations recorded by [`forward`], consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    width: usize,
    height: usize,
    arch: ArchConfig,
    network_id: u64,
    network_version: u64,
    inputs: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
    output: Vec<f64>,
}

impl ForwardCache {
    /// Network output, row-major interleaved RGB in normalized units.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn into_output(self) -> Vec<f64> {
        self.output
    }
}

#[inline]
fn normalize(v: u8) -> f64 {
    v as f64 / 255.0
}

/// Runs every pixel network on its encrypted pixel.
pub fn forward(net: &AttackNetwork, enc: &Image) -> Result<ForwardCache> {
    net.check_image(enc)?;
    let n = net.pixel_count();
    let l = Layout::new(net.arch);
    let inputs: Vec<f64> = enc.data().iter().map(|&v| normalize(v)).collect();
    let mut h1 = vec![0.0; n * l.m1];
    let mut h2 = vec![0.0; n * l.m2];
    let mut output = vec![0.0; 3 * n];
    for j in 0..n {
        let x = [inputs[3 * j], inputs[3 * j + 1], inputs[3 * j + 2]];
        let y = pixel::forward(
            net.pixel_params(j),
            &l,
            &x,
            &mut h1[j * l.m1..(j + 1) * l.m1],
            &mut h2[j * l.m2..(j + 1) * l.m2],
        );
        output[3 * j..3 * j + 3].copy_from_slice(&y);
    }
    Ok(ForwardCache {
        width: net.width,
        height: net.height,
        arch: net.arch,
        network_id: net.id,
        network_version: net.version,
        inputs,
        h1,
        h2,
        output,
    })
}

/// Mean over all `3n` values of `(pred - target/255)²`.
pub fn loss_mse(pred: &[f64], target: &Image) -> Result<f64> {
    if pred.len() != target.data().len() {
        return Err(argument(format!("prediction has {} values but target has {}", pred.len(), target.data().len())));
    }
    let sum: f64 = pred
        .iter()
        .zip(target.data())
        .map(|(&y, &t)| {
            let d = y - normalize(t);
            d * d
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Parameter gradients, laid out like [`AttackNetwork::params`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    arch: ArchConfig,
    values: Vec<f64>,
}

impl Gradients {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Gradient entries of pixel `j`.
    pub fn pixel(&self, j: usize) -> &[f64] {
        let p = self.arch.params_per_pixel();
        &self.values[j * p..(j + 1) * p]
    }

    /// Elementwise mean of several gradients, summed in the given order.
    pub fn mean(grads: &[Gradients]) -> Result<Gradients> {
        let first = grads.first().ok_or_else(|| argument("no gradients to average"))?;
        let mut values = vec![0.0; first.values.len()];
        for g in grads {
            if g.values.len() != values.len() {
                return Err(argument("gradient shapes differ"));
            }
            values.iter_mut().zip(&g.values).for_each(|(a, b)| *a += b);
        }
        let k = grads.len() as f64;
        values.iter_mut().for_each(|v| *v /= k);
        Ok(Gradients { arch: first.arch, values })
    }
}

/// Exact gradient of [`loss_mse`] with respect to every parameter.
pub fn backward(net: &AttackNetwork, cache: &ForwardCache, target: &Image) -> Result<Gradients> {
    if cache.network_id != net.id
        || cache.network_version != net.version
        || cache.arch != net.arch
        || cache.width != net.width
        || cache.height != net.height
    {
        return Err(Error::Usage("forward cache does not belong to this network state".into()));
    }
    net.check_image(target)?;
    let n = net.pixel_count();
    let l = Layout::new(net.arch);
    let scale = 2.0 / (3 * n) as f64;
    let mut values = vec![0.0; net.params.len()];
    let mut scratch = Scratch::new(&l);
    for (j, grad) in values.chunks_mut(l.total).enumerate() {
        let x = [cache.inputs[3 * j], cache.inputs[3 * j + 1], cache.inputs[3 * j + 2]];
        let t = target.pixel(j);
        let y = &cache.output[3 * j..3 * j + 3];
        let dy = [scale * (y[0] - normalize(t[0])), scale * (y[1] - normalize(t[1])), scale * (y[2] - normalize(t[2]))];
        pixel::backward(
            net.pixel_params(j),
            &l,
            &x,
            &cache.h1[j * l.m1..(j + 1) * l.m1],
            &cache.h2[j * l.m2..(j + 1) * l.m2],
            &dy,
            grad,
            &mut scratch,
        );
    }
    Ok(Gradients { arch: net.arch, values })
}

/// One momentum step: `v ← μ·v − lr·(g + λ·w)`, `w ← w + v`.
pub fn sgd_step(net: &mut AttackNetwork, grads: &Gradients, lr: f64, cfg: &TrainConfig) -> Result<()> {
    if grads.values.len() != net.params.len() {
        return Err(argument("gradient shape does not match the network"));
    }
    pixel::sgd_update(&mut net.params, &mut net.velocity, &grads.values, lr, cfg.momentum, cfg.weight_decay);
    net.version += 1;
    Ok(())
}

/// Step schedule: `base_lr · factor^(number of drop epochs ≤ epoch)`.
pub fn lr_at_epoch(epoch: usize, cfg: &TrainConfig) -> f64 {
    let drops = cfg.lr_drop_epochs.iter().filter(|&&e| e <= epoch).count();
    cfg.base_lr * cfg.lr_drop_factor.powi(drops as i32)
}

/// Order in which training pairs are visited during `epoch`.
pub fn epoch_order(cfg: &TrainConfig, epoch: usize, count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..count).collect();
    SplitMix64::derived(cfg.seed, epoch as u64).shuffle(&mut order);
    order
}

/// Trains `net` on `(encrypted, plaintext)` pairs.
///
/// Each epoch visits the pairs in [`epoch_order`]; each minibatch (the last
/// one may be partial) averages the per-image gradients, summed in ascending
/// pair index, and applies one [`sgd_step`] at [`lr_at_epoch`]. Pixels are
/// trained in parallel; the result is bit-identical for any thread count.
///
/// Returns the trained network and the mean training loss of every epoch.
pub fn train(mut net: AttackNetwork, pairs: &[(Image, Image)], cfg: &TrainConfig) -> Result<(AttackNetwork, Vec<f64>)> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(argument("no training pairs"));
    }
    for (enc, plain) in pairs {
        net.check_image(enc)?;
        net.check_image(plain)?;
    }
    let n = net.pixel_count();
    let count = pairs.len();
    let l = Layout::new(net.arch);

    // pixel-major copies: sample i of pixel j lives at (j * count + i) * 3
    let mut xs = vec![0u8; 3 * n * count];
    let mut ts = vec![0u8; 3 * n * count];
    for (i, (enc, plain)) in pairs.iter().enumerate() {
        for j in 0..n {
            let at = 3 * (j * count + i);
            xs[at..at + 3].copy_from_slice(&enc.data()[3 * j..3 * j + 3]);
            ts[at..at + 3].copy_from_slice(&plain.data()[3 * j..3 * j + 3]);
        }
    }

    let batches: Vec<Vec<Vec<usize>>> = (0..cfg.epochs)
        .map(|e| {
            epoch_order(cfg, e, count)
                .chunks(cfg.batch_size)
                .map(|b| {
                    let mut b = b.to_vec();
                    b.sort_unstable();
                    b
                })
                .collect()
        })
        .collect();
    let lrs: Vec<f64> = (0..cfg.epochs).map(|e| lr_at_epoch(e, cfg)).collect();
    let scale = match cfg.lr_scaling {
        LrScaling::Global => 2.0 / (3 * n) as f64,
        LrScaling::PerPixel => 2.0 / 3.0,
    };

    let mut sse = vec![0.0; n * cfg.epochs];
    net.params
        .par_chunks_mut(l.total)
        .zip(net.velocity.par_chunks_mut(l.total))
        .zip(sse.par_chunks_mut(cfg.epochs))
        .enumerate()
        .for_each(|(j, ((params, velocity), sse))| {
            let xs = &xs[3 * j * count..3 * (j + 1) * count];
            let ts = &ts[3 * j * count..3 * (j + 1) * count];
            let mut h1 = vec![0.0; l.m1];
            let mut h2 = vec![0.0; l.m2];
            let mut grad = vec![0.0; l.total];
            let mut scratch = Scratch::new(&l);
            for (epoch, epoch_batches) in batches.iter().enumerate() {
                for batch in epoch_batches {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    for &i in batch {
                        let x = [normalize(xs[3 * i]), normalize(xs[3 * i + 1]), normalize(xs[3 * i + 2])];
                        let y = pixel::forward(params, &l, &x, &mut h1, &mut h2);
                        let mut dy = [0.0; 3];
                        for c in 0..3 {
                            let d = y[c] - normalize(ts[3 * i + c]);
                            sse[epoch] += d * d;
                            dy[c] = scale * d;
                        }
                        pixel::backward(params, &l, &x, &h1, &h2, &dy, &mut grad, &mut scratch);
                    }
                    let k = batch.len() as f64;
                    grad.iter_mut().for_each(|g| *g /= k);
                    pixel::sgd_update(params, velocity, &grad, lrs[epoch], cfg.momentum, cfg.weight_decay);
                }
            }
        });
    net.version += 1;

    let denom = (3 * n * count) as f64;
    let history = (0..cfg.epochs).map(|e| (0..n).map(|j| sse[j * cfg.epochs + e]).sum::<f64>() / denom).collect();
    Ok((net, history))
}

/// Forward pass, clamped to `[0, 1]`, scaled by 255 and rounded half away
/// from zero.
pub fn reconstruct(net: &AttackNetwork, enc: &Image) -> Result<Image> {
    let cache = forward(net, enc)?;
    let data = cache.output.iter().map(|&y| (y.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    Image::new(net.width, net.height, data)
}
