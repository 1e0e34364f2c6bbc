//! Test-only oracles shared by the integration tests.
#![allow(dead_code)]

use pixelcrypt::attack::{forward, loss_mse, ArchConfig, AttackNetwork};
use pixelcrypt::keygen::SplitMix64;
use pixelcrypt::Image;

pub fn random_image(rng: &mut SplitMix64, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| [rng.next_below(256) as u8, rng.next_below(256) as u8, rng.next_below(256) as u8])
        .unwrap()
}

/// Network with every parameter, biases included, uniform in `[-1, 1]`.
///
/// Zero biases put whole layers exactly on the relu kink whenever the layer
/// below is inactive, where finite differences are meaningless.
pub fn random_network(rng: &mut SplitMix64, w: usize, h: usize, arch: ArchConfig) -> AttackNetwork {
    let mut net = AttackNetwork::zeros(w, h, arch).unwrap();
    net.params_mut().iter_mut().for_each(|p| *p = 2.0 * rng.next_f64() - 1.0);
    net
}

/// Loss as a function of the flat parameter vector, evaluated from scratch.
fn loss_at(base: &AttackNetwork, params: &[f64], input: &Image, target: &Image) -> f64 {
    let mut net = base.clone();
    net.params_mut().copy_from_slice(params);
    loss_mse(forward(&net, input).unwrap().output(), target).unwrap()
}

/// Central finite differences of the loss with respect to every parameter.
pub fn central_differences(net: &AttackNetwork, input: &Image, target: &Image, eps: f64) -> Vec<f64> {
    let mut p = net.params().to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + eps;
            let plus = loss_at(net, &p, input, target);
            p[i] = orig - eps;
            let minus = loss_at(net, &p, input, target);
            p[i] = orig;
            (plus - minus) / (2.0 * eps)
        })
        .collect()
}

/// Largest `|a - n| / max(|a|, |n|)`, ignoring entries where both are below 1e-9.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            let scale = a.abs().max(n.abs());
            if scale < 1e-9 {
                0.0
            } else {
                (a - n).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}
