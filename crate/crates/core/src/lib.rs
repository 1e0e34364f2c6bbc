//! A pixel-based perceptual image cipher (per-pixel negative-positive
//! transform plus optional color-channel shuffling) together with a learned
//! reconstruction attack built from per-pixel, unshared 1×1 networks.
//!
//! The crate is organized by workflow:
//!
//! * [`image_io`] reads and writes binary PPM files and STL-10 containers.
//! * [`keygen`] expands a 64-bit master seed into per-pixel keystreams.
//! * [`cipher`] encrypts and decrypts images with a keystream.
//! * [`keyspace`] reports brute-force key-space sizes.
//! * [`attack`] trains the locally connected reconstruction network.
//! * [`metrics`] implements SSIM, MSE and PSNR.
//! * [`harness`] runs the full same-key vs. per-image-key experiment.
//! * [`cli`] backs the `pixelcrypt` binary.

pub mod attack;
pub mod cipher;
pub mod cli;
mod error;
pub mod harness;
pub mod image_io;
pub mod keygen;
pub mod keyspace;
pub mod metrics;
pub mod synth;

pub use crate::error::{Error, Result};
pub use crate::image_io::Image;
