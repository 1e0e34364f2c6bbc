use super::pixel::Layout;
use super::{ArchConfig, AttackNetwork};
use crate::cipher::{EncryptionConfig, INVERSE_PERMUTATION, PERMUTATIONS};
use crate::error::{argument, Result};
use crate::keygen::Keystream;

/// Builds weights that invert the cipher exactly for one known keystream.
///
/// Layer 1 routes each plaintext channel's encrypted sample `x` (undoing the
/// color permutation) into one unit and `1 - x` into another; layer 2 passes
/// those six nonnegative units through; layer 3 picks `x` or `1 - x` per
/// channel according to the flip bit. Requires `m1 ≥ 6` and `m2 ≥ 6`.
pub fn construct_inversion_network(
    width: usize,
    height: usize,
    arch: ArchConfig,
    ks: &Keystream,
    cfg: EncryptionConfig,
) -> Result<AttackNetwork> {
    if arch.m1 < 6 || arch.m2 < 6 {
        return Err(argument("inversion network needs at least 6 units in layers 1 and 2"));
    }
    if ks.len() != width * height {
        return Err(argument("keystream does not match the network size"));
    }
    let mut net = AttackNetwork::zeros(width, height, arch)?;
    let l = Layout::new(arch);
    for j in 0..ks.len() {
        let shuffle = if cfg.use_color_shuffle { ks.shuffle(j) as usize } else { 0 };
        let source = PERMUTATIONS[INVERSE_PERMUTATION[shuffle]];
        let p = net.pixel_params_mut(j);
        for k in 0..3 {
            p[l.w1 + 3 * k + source[k]] = 1.0;
            p[l.w1 + 3 * (3 + k) + source[k]] = -1.0;
            p[l.b1 + 3 + k] = 1.0;
        }
        for u in 0..6 {
            p[l.w2 + l.m1 * u + u] = 1.0;
        }
        for k in 0..3 {
            let unit = if ks.flip(k, j) == 1 { 3 + k } else { k };
            p[l.w3 + l.m2 * k + unit] = 1.0;
        }
    }
    Ok(net)
}
