//! Forward and backward kernels for a single pixel's 3→m1→m2→3 network.
//!
//! Parameters of one pixel are stored contiguously as
//! `[W1 (m1×3), b1 (m1), W2 (m2×m1), b2 (m2), W3 (3×m2), b3 (3)]`,
//! weights row-major with one row per output unit.

use super::ArchConfig;

/// Offsets of each parameter block inside one pixel's slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub m1: usize,
    pub m2: usize,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub w3: usize,
    pub b3: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(arch: ArchConfig) -> Self {
        let (m1, m2) = (arch.m1, arch.m2);
        let w1 = 0;
        let b1 = w1 + m1 * 3;
        let w2 = b1 + m1;
        let b2 = w2 + m2 * m1;
        let w3 = b2 + m2;
        let b3 = w3 + 3 * m2;
        Layout { m1, m2, w1, b1, w2, b2, w3, b3, total: b3 + 3 }
    }
}

#[inline]
fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Writes hidden activations into `h1`/`h2` and returns the linear output.
pub(crate) fn forward(p: &[f64], l: &Layout, x: &[f64; 3], h1: &mut [f64], h2: &mut [f64]) -> [f64; 3] {
    for (i, h) in h1.iter_mut().enumerate() {
        let w = &p[l.w1 + 3 * i..l.w1 + 3 * i + 3];
        *h = relu(w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + p[l.b1 + i]);
    }
    for (k, h) in h2.iter_mut().enumerate() {
        let w = &p[l.w2 + l.m1 * k..l.w2 + l.m1 * (k + 1)];
        let z = w.iter().zip(h1.iter()).fold(p[l.b2 + k], |acc, (a, b)| acc + a * b);
        *h = relu(z);
    }
    let mut y = [0.0; 3];
    for (o, out) in y.iter_mut().enumerate() {
        let w = &p[l.w3 + l.m2 * o..l.w3 + l.m2 * (o + 1)];
        *out = w.iter().zip(h2.iter()).fold(p[l.b3 + o], |acc, (a, b)| acc + a * b);
    }
    y
}

/// Scratch space for [`backward`].
pub(crate) struct Scratch {
    pub dh1: Vec<f64>,
    pub dh2: Vec<f64>,
}

impl Scratch {
    pub fn new(l: &Layout) -> Self {
        Scratch { dh1: vec![0.0; l.m1], dh2: vec![0.0; l.m2] }
    }
}

/// Accumulates into `grad` the parameter gradient given `dy = ∂loss/∂y`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(
    p: &[f64],
    l: &Layout,
    x: &[f64; 3],
    h1: &[f64],
    h2: &[f64],
    dy: &[f64; 3],
    grad: &mut [f64],
    s: &mut Scratch,
) {
    s.dh2.iter_mut().for_each(|v| *v = 0.0);
    for o in 0..3 {
        grad[l.b3 + o] += dy[o];
        for k in 0..l.m2 {
            grad[l.w3 + l.m2 * o + k] += dy[o] * h2[k];
            s.dh2[k] += p[l.w3 + l.m2 * o + k] * dy[o];
        }
    }
    for (k, d) in s.dh2.iter_mut().enumerate() {
        if h2[k] <= 0.0 {
            *d = 0.0;
        }
    }
    s.dh1.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..l.m2 {
        let d = s.dh2[k];
        grad[l.b2 + k] += d;
        for i in 0..l.m1 {
            grad[l.w2 + l.m1 * k + i] += d * h1[i];
            s.dh1[i] += p[l.w2 + l.m1 * k + i] * d;
        }
    }
    for i in 0..l.m1 {
        let d = if h1[i] > 0.0 { s.dh1[i] } else { 0.0 };
        grad[l.b1 + i] += d;
        for c in 0..3 {
            grad[l.w1 + 3 * i + c] += d * x[c];
        }
    }
}

/// Classical momentum with L2 decay folded into the gradient.
pub(crate) fn sgd_update(
    params: &mut [f64],
    velocity: &mut [f64],
    grad: &[f64],
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) {
    for ((w, v), &g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        let g = g + weight_decay * *w;
        *v = momentum * *v - lr * g;
        *w += *v;
    }
}
