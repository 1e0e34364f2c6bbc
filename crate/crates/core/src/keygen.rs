//! Keystream expansion from a 64-bit master seed.
//!
//! Every random value in the crate comes from SplitMix64 so that keystreams,
//! network initialization and data shuffling are reproducible bit-for-bit.

use std::fmt;
use std::str::FromStr;

use crate::error::{argument, Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 step: returns `(value, new_state)`.
pub fn splitmix64_next(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31), state)
}

/// Stateful SplitMix64 generator.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// A generator whose seed is `base` mixed with the hash of `index`.
    pub fn derived(base: u64, index: u64) -> Self {
        SplitMix64::new(base ^ splitmix64_next(index).0)
    }

    pub fn next_u64(&mut self) -> u64 {
        let (value, state) = splitmix64_next(self.state);
        self.state = state;
        value
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[0, bound)`; the modulo bias is below 2⁻⁵⁰ for small bounds.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let k = self.next_below(i as u64 + 1) as usize;
            items.swap(i, k);
        }
    }
}

/// Root secret from which all per-image keys are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct MasterKey {
    pub seed: u64,
}

impl MasterKey {
    pub fn new(seed: u64) -> Self {
        MasterKey { seed }
    }
}

/// Parses a decimal or `0x`-prefixed hexadecimal 64-bit seed.
pub fn parse_seed(s: &str) -> Result<u64> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
        None => s.replace('_', "").parse(),
    };
    parsed.map_err(|_| argument(format!("invalid seed {s:?}")))
}

impl FromStr for MasterKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_seed(s).map(MasterKey::new)
    }
}

/// Same-key vs. per-image-keys condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyPolicy {
    /// Every image, train and test, shares one keystream.
    SameKey,
    /// Every image gets its own keystream.
    PerImageKeys,
}

impl KeyPolicy {
    pub fn name(self) -> &'static str {
        match self {
            KeyPolicy::SameKey => "same",
            KeyPolicy::PerImageKeys => "per-image",
        }
    }
}

impl fmt::Display for KeyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KeyPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "same" | "same-key" => Ok(KeyPolicy::SameKey),
            "per-image" | "per-image-keys" | "different" => Ok(KeyPolicy::PerImageKeys),
            other => Err(argument(format!("unknown key policy {other:?} (expected same|per-image)"))),
        }
    }
}

/// Per-pixel random values for one image: three flip-bit planes and the
/// color-shuffle integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Keystream {
    flips: [Vec<u8>; 3],
    shuffles: Vec<u8>,
}

impl Keystream {
    pub fn new(flips: [Vec<u8>; 3], shuffles: Vec<u8>) -> Result<Self> {
        let n = shuffles.len();
        if n == 0 {
            return Err(argument("keystream must cover at least one pixel"));
        }
        if flips.iter().any(|f| f.len() != n) {
            return Err(argument("flip and shuffle sequences differ in length"));
        }
        if flips.iter().flatten().any(|&b| b > 1) {
            return Err(argument("flip values must be 0 or 1"));
        }
        if shuffles.iter().any(|&s| s > 5) {
            return Err(argument("shuffle values must lie in 0..6"));
        }
        Ok(Keystream { flips, shuffles })
    }

    /// The all-zero keystream: no flips, identity permutation everywhere.
    pub fn identity(n: usize) -> Result<Self> {
        Keystream::new([vec![0; n], vec![0; n], vec![0; n]], vec![0; n])
    }

    /// Number of pixels covered.
    pub fn len(&self) -> usize {
        self.shuffles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shuffles.is_empty()
    }

    /// Flip bit `r_c(j)` for channel `c` (0=R, 1=G, 2=B) at pixel `j`.
    pub fn flip(&self, channel: usize, j: usize) -> u8 {
        self.flips[channel][j]
    }

    pub fn flips(&self, channel: usize) -> &[u8] {
        &self.flips[channel]
    }

    /// Shuffle integer `s(j)` in `0..6`.
    pub fn shuffle(&self, j: usize) -> u8 {
        self.shuffles[j]
    }

    pub fn shuffles(&self) -> &[u8] {
        &self.shuffles
    }
}

/// Expands `master` into the keystream of image `image_index`.
///
/// Substream `c` (0..3 for the R, G, B flips, 3 for shuffles) is SplitMix64
/// seeded with `master.seed ^ splitmix64_next(4 * image_index + c).0`.
pub fn derive_keystream(master: MasterKey, image_index: u64, width: usize, height: usize) -> Result<Keystream> {
    let n = width * height;
    if n == 0 {
        return Err(argument(format!("zero-area image {width}x{height}")));
    }
    let substream = |c: u64| SplitMix64::derived(master.seed, image_index.wrapping_mul(4).wrapping_add(c));
    let flip_plane = |c: u64| {
        let mut rng = substream(c);
        (0..n).map(|_| (rng.next_u64() & 1) as u8).collect::<Vec<u8>>()
    };
    let flips = [flip_plane(0), flip_plane(1), flip_plane(2)];
    let mut rng = substream(3);
    let shuffles = (0..n).map(|_| (rng.next_u64() % 6) as u8).collect();
    Ok(Keystream { flips, shuffles })
}

/// Effective key index of each of `count` images under `policy`.
pub fn keys_for_dataset(_master: MasterKey, policy: KeyPolicy, count: usize) -> Vec<u64> {
    match policy {
        KeyPolicy::SameKey => vec![0; count],
        KeyPolicy::PerImageKeys => (0..count as u64).collect(),
    }
}
