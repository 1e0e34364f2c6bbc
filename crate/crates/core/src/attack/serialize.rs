//! Flat binary network files: the 6-byte magic `PVNET1`, then width, height,
//! m1, m2, m3 as little-endian `u32`, then every parameter as a little-endian
//! `f64` in pixel order (per pixel: W1, b1, W2, b2, W3, b3, weights
//! row-major). Momentum buffers are not stored.

use std::fs;
use std::path::Path;

use super::{ArchConfig, AttackNetwork};
use crate::error::{Error, Result};

pub const NETWORK_MAGIC: &[u8; 6] = b"PVNET1";
const HEADER_LEN: usize = 6 + 5 * 4;

pub fn write_network(net: &AttackNetwork) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * net.param_count());
    out.extend_from_slice(NETWORK_MAGIC);
    let arch = net.arch();
    for v in [net.width(), net.height(), arch.m1, arch.m2, arch.m3] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    for p in net.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn read_network(bytes: &[u8]) -> Result<AttackNetwork> {
    if bytes.len() < HEADER_LEN || &bytes[..6] != NETWORK_MAGIC {
        return Err(Error::Format("not a PVNET1 network file".into()));
    }
    let field = |i: usize| {
        let at = 6 + 4 * i;
        u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize
    };
    let (width, height) = (field(0), field(1));
    let arch = ArchConfig::new(field(2), field(3), field(4))?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(arch.params_per_pixel()))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("network header dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(Error::Length { expected, actual: body.len() });
    }
    let params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    AttackNetwork::from_params(width, height, arch, params)
}

pub fn save_network(net: &AttackNetwork, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, write_network(net))?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<AttackNetwork> {
    read_network(&fs::read(path)?)
}
