//! End-to-end attack experiment: encrypt a dataset under a key policy, train
//! the reconstruction network on `(encrypted, plaintext)` training pairs,
//! reconstruct the encrypted test images and average the quality metrics.
//! One report row is produced per (key policy, cipher steps) cell.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::attack::{self, ArchConfig, LrScaling, TrainConfig};
use crate::cipher::{self, EncryptionConfig};
use crate::error::{argument, Error, Result};
use crate::image_io::{self, Image};
use crate::keygen::{self, parse_seed, KeyPolicy, Keystream, MasterKey};
use crate::metrics::{self, SsimParams};
use crate::synth;

/// Where plaintext images come from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    /// Each path is either a directory of PPM files or an STL-10 `*_X.bin`.
    Files { train: PathBuf, test: PathBuf },
    /// Procedural images from [`synth`]; test images follow the training
    /// images in the same corpus.
    Synthetic { seed: u64, size: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub train_count: usize,
    pub test_count: usize,
    pub crop: Option<usize>,
    pub policies: Vec<KeyPolicy>,
    pub ciphers: Vec<EncryptionConfig>,
    pub arch: ArchConfig,
    pub train: TrainConfig,
    pub master: MasterKey,
    pub source: DataSource,
    pub dump_dir: Option<PathBuf>,
    pub dump_count: usize,
}

impl ExperimentConfig {
    /// Desk-scale run: 32×32 crops of 48×48 synthetic images, 200 train /
    /// 50 test, 30 epochs, both key policies and both cipher variants.
    pub fn desk() -> Self {
        ExperimentConfig {
            train_count: 200,
            test_count: 50,
            crop: Some(32),
            policies: vec![KeyPolicy::SameKey, KeyPolicy::PerImageKeys],
            ciphers: vec![EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()],
            arch: ArchConfig::reference(),
            train: TrainConfig {
                epochs: 30,
                base_lr: 0.01,
                lr_drop_epochs: vec![17, 26],
                lr_drop_factor: 0.1,
                momentum: 0.9,
                weight_decay: 0.0005,
                batch_size: 1,
                seed: 1,
                lr_scaling: LrScaling::PerPixel,
            },
            master: MasterKey::new(0x5EED),
            source: DataSource::Synthetic { seed: 7, size: 48 },
            dump_dir: None,
            dump_count: 4,
        }
    }

    /// Full-scale run on STL-10: 5000 train / 8000 test at 96×96 with the
    /// reference optimizer settings.
    pub fn full_scale(stl10_dir: impl AsRef<Path>) -> Self {
        let dir = stl10_dir.as_ref();
        ExperimentConfig {
            train_count: 5000,
            test_count: 8000,
            crop: None,
            train: TrainConfig::reference(),
            source: DataSource::Files { train: dir.join("train_X.bin"), test: dir.join("test_X.bin") },
            ..ExperimentConfig::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_count == 0 || self.test_count == 0 {
            return Err(argument("train_count and test_count must be at least 1"));
        }
        if let Some(c) = self.crop {
            if c < 11 {
                return Err(argument(format!("crop {c} is smaller than the 11x11 SSIM window")));
            }
        }
        if self.policies.is_empty() || self.ciphers.is_empty() {
            return Err(argument("at least one key policy and one cipher variant are required"));
        }
        self.train.validate()
    }

    /// Parses a `key = value` configuration on top of [`ExperimentConfig::desk`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::desk();
        let mut pending = PendingSource::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.apply_with(key.trim(), value.trim(), &mut pending)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        pending.resolve(&mut cfg)?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ExperimentConfig::parse(&fs::read_to_string(path)?)
    }

    /// Applies a batch of `key = value` overrides.
    pub fn apply_overrides<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let mut pending = PendingSource::from_config(self);
        for (k, v) in pairs {
            self.apply_with(k, v, &mut pending)?;
        }
        pending.resolve(self)
    }

    fn apply_with(&mut self, key: &str, value: &str, pending: &mut PendingSource) -> Result<()> {
        let key = key.replace('-', "_");
        let usize_of =
            |v: &str| v.parse::<usize>().map_err(|_| Error::Config(format!("{key}: expected an integer, got {v:?}")));
        let f64_of =
            |v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("{key}: expected a number, got {v:?}")));
        match key.as_str() {
            "train_count" => self.train_count = usize_of(value)?,
            "test_count" => self.test_count = usize_of(value)?,
            "crop" => self.crop = if value == "none" { None } else { Some(usize_of(value)?) },
            "policy" => {
                self.policies = if value == "all" {
                    vec![KeyPolicy::SameKey, KeyPolicy::PerImageKeys]
                } else {
                    value.split(',').map(str::parse).collect::<Result<_>>()?
                }
            }
            "shuffle" => {
                self.ciphers = match value {
                    "true" | "yes" | "1" => vec![EncryptionConfig::with_shuffle()],
                    "false" | "no" | "0" => vec![EncryptionConfig::negpos_only()],
                    "both" => vec![EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()],
                    other => return Err(Error::Config(format!("shuffle: expected true|false|both, got {other:?}"))),
                }
            }
            "m1" => self.arch = ArchConfig::new(usize_of(value)?, self.arch.m2, self.arch.m3)?,
            "m2" => self.arch = ArchConfig::new(self.arch.m1, usize_of(value)?, self.arch.m3)?,
            "m3" => self.arch = ArchConfig::new(self.arch.m1, self.arch.m2, usize_of(value)?)?,
            "epochs" => self.train.epochs = usize_of(value)?,
            "base_lr" => self.train.base_lr = f64_of(value)?,
            "lr_drop_epochs" => {
                self.train.lr_drop_epochs = if value.is_empty() || value == "none" {
                    Vec::new()
                } else {
                    value.split(',').map(|v| usize_of(v.trim())).collect::<Result<_>>()?
                }
            }
            "lr_drop_factor" => self.train.lr_drop_factor = f64_of(value)?,
            "momentum" => self.train.momentum = f64_of(value)?,
            "weight_decay" => self.train.weight_decay = f64_of(value)?,
            "batch_size" => self.train.batch_size = usize_of(value)?,
            "train_seed" => self.train.seed = parse_seed(value)?,
            "lr_scaling" => self.train.lr_scaling = value.parse()?,
            "seed" => self.master = value.parse()?,
            "source" => pending.kind = Some(value.to_string()),
            "train_path" => pending.train = Some(PathBuf::from(value)),
            "test_path" => pending.test = Some(PathBuf::from(value)),
            "synth_seed" => pending.synth_seed = Some(parse_seed(value)?),
            "synth_size" => pending.synth_size = Some(usize_of(value)?),
            "dump_dir" => self.dump_dir = Some(PathBuf::from(value)),
            "dump_count" => self.dump_count = usize_of(value)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }
}

#[derive(Default)]
struct PendingSource {
    kind: Option<String>,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    synth_seed: Option<u64>,
    synth_size: Option<usize>,
}

impl PendingSource {
    fn from_config(cfg: &ExperimentConfig) -> Self {
        let mut p = PendingSource::default();
        match &cfg.source {
            DataSource::Files { train, test } => {
                p.train = Some(train.clone());
                p.test = Some(test.clone());
            }
            DataSource::Synthetic { seed, size } => {
                p.synth_seed = Some(*seed);
                p.synth_size = Some(*size);
            }
        }
        p
    }

    fn resolve(self, cfg: &mut ExperimentConfig) -> Result<()> {
        let kind = match self.kind.as_deref() {
            Some(k) => k.to_string(),
            None if self.train.is_some() || self.test.is_some() => "files".into(),
            None => match cfg.source {
                DataSource::Files { .. } => "files".into(),
                DataSource::Synthetic { .. } => "synthetic".into(),
            },
        };
        cfg.source = match kind.as_str() {
            "files" | "stl10" | "ppm" => DataSource::Files {
                train: self.train.ok_or_else(|| Error::Config("train_path is required for file sources".into()))?,
                test: self.test.ok_or_else(|| Error::Config("test_path is required for file sources".into()))?,
            },
            "synthetic" => {
                let (seed, size) = match cfg.source {
                    DataSource::Synthetic { seed, size } => (seed, size),
                    _ => (7, 48),
                };
                DataSource::Synthetic { seed: self.synth_seed.unwrap_or(seed), size: self.synth_size.unwrap_or(size) }
            }
            other => return Err(Error::Config(format!("unknown source {other:?}"))),
        };
        Ok(())
    }
}

/// Aggregated results for one (policy, cipher) cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub policy: KeyPolicy,
    pub cipher: EncryptionConfig,
    pub mean_ssim: f64,
    pub mean_mse: f64,
    pub mean_psnr: f64,
    pub n_test: usize,
    pub loss_history: Vec<f64>,
    pub dumped: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn row(&self, policy: KeyPolicy, cipher: EncryptionConfig) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.policy == policy && r.cipher == cipher)
    }
}

/// Effective key indices of the training and test images.
///
/// Under [`KeyPolicy::SameKey`] everything uses index 0; under
/// [`KeyPolicy::PerImageKeys`] training image `i` uses `i` and test image `k`
/// uses the unseen index `train_count + k`.
pub fn assign_key_indices(
    master: MasterKey,
    policy: KeyPolicy,
    train_count: usize,
    test_count: usize,
) -> (Vec<u64>, Vec<u64>) {
    let train = keygen::keys_for_dataset(master, policy, train_count);
    let test = match policy {
        KeyPolicy::SameKey => keygen::keys_for_dataset(master, policy, test_count),
        KeyPolicy::PerImageKeys => (0..test_count as u64).map(|k| train_count as u64 + k).collect(),
    };
    (train, test)
}

/// Encrypts `images[i]` with the keystream of `indices[i]`.
pub fn encrypt_dataset(
    images: &[Image],
    indices: &[u64],
    master: MasterKey,
    cfg: EncryptionConfig,
) -> Result<Vec<Image>> {
    if images.len() != indices.len() {
        return Err(argument("one key index per image is required"));
    }
    images
        .par_iter()
        .zip(indices.par_iter())
        .map(|(img, &idx)| {
            let ks: Keystream = keygen::derive_keystream(master, idx, img.width(), img.height())?;
            cipher::encrypt(img, &ks, cfg)
        })
        .collect()
}

/// Plaintext training and test images after optional cropping.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(Vec<Image>, Vec<Image>)> {
    let (train, test) = match &cfg.source {
        DataSource::Files { train, test } => {
            (image_io::load_images(train, cfg.train_count)?, image_io::load_images(test, cfg.test_count)?)
        }
        DataSource::Synthetic { seed, size } => (
            synth::synthetic_images(*seed, 0, cfg.train_count, *size)?,
            synth::synthetic_images(*seed, cfg.train_count as u64, cfg.test_count, *size)?,
        ),
    };
    if train.len() < cfg.train_count || test.len() < cfg.test_count {
        return Err(argument(format!(
            "dataset provides {} train / {} test images, {} / {} requested",
            train.len(),
            test.len(),
            cfg.train_count,
            cfg.test_count
        )));
    }
    let crop = |imgs: Vec<Image>| -> Result<Vec<Image>> {
        match cfg.crop {
            Some(size) => imgs.iter().map(|img| image_io::center_crop(img, size)).collect(),
            None => Ok(imgs),
        }
    };
    let (train, test) = (crop(train)?, crop(test)?);
    let first = &train[0];
    if train.iter().chain(&test).any(|img| !img.same_dims(first)) {
        return Err(argument("all images must share the same dimensions"));
    }
    Ok((train, test))
}

struct ImageScores {
    ssim: f64,
    mse: f64,
    psnr: f64,
}

/// Mean SSIM, MSE and PSNR of `recon[i]` against `plain[i]`, reduced in
/// image order.
pub fn score_reconstructions(plain: &[Image], recon: &[Image]) -> Result<(f64, f64, f64)> {
    if plain.len() != recon.len() || plain.is_empty() {
        return Err(argument("need one reconstruction per test image"));
    }
    let params = SsimParams::default();
    let scores: Vec<ImageScores> = recon
        .par_iter()
        .zip(plain.par_iter())
        .map(|(rec, orig)| {
            Ok(ImageScores {
                ssim: metrics::ssim(orig, rec, &params)?,
                mse: metrics::mse_image(orig, rec)?,
                psnr: metrics::psnr(orig, rec)?,
            })
        })
        .collect::<Result<_>>()?;
    let k = scores.len() as f64;
    Ok((
        scores.iter().map(|s| s.ssim).sum::<f64>() / k,
        scores.iter().map(|s| s.mse).sum::<f64>() / k,
        scores.iter().map(|s| s.psnr).sum::<f64>() / k,
    ))
}

/// Writes original, encrypted and reconstructed PPMs for the first `count`
/// test images and returns the written paths.
pub fn dump_triptychs(
    dir: &Path,
    policy: KeyPolicy,
    cipher_cfg: EncryptionConfig,
    plain: &[Image],
    enc: &[Image],
    recon: &[Image],
    count: usize,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let steps = cipher_cfg.steps_label().replace('+', "-");
    for i in 0..count.min(plain.len()).min(enc.len()).min(recon.len()) {
        let stem = format!("{}_step{steps}_{i:04}", policy.name());
        for (suffix, img) in [("orig", &plain[i]), ("enc", &enc[i]), ("rec", &recon[i])] {
            let path = dir.join(format!("{stem}_{suffix}.ppm"));
            image_io::save_ppm(img, &path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Runs every configured cell in order (policies outer, ciphers inner).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let (train_plain, test_plain) = load_dataset(cfg)?;
    let (width, height) = (train_plain[0].width(), train_plain[0].height());
    let mut rows = Vec::new();
    for &policy in &cfg.policies {
        let (train_idx, test_idx) = assign_key_indices(cfg.master, policy, train_plain.len(), test_plain.len());
        for &cipher_cfg in &cfg.ciphers {
            let train_enc = encrypt_dataset(&train_plain, &train_idx, cfg.master, cipher_cfg)?;
            let test_enc = encrypt_dataset(&test_plain, &test_idx, cfg.master, cipher_cfg)?;
            let pairs: Vec<(Image, Image)> = train_enc.into_iter().zip(train_plain.iter().cloned()).collect();

            let net = attack::init_network(width, height, cfg.arch, cfg.train.seed)?;
            let (net, loss_history) = attack::train(net, &pairs, &cfg.train)?;

            let recon: Vec<Image> =
                test_enc.par_iter().map(|enc| attack::reconstruct(&net, enc)).collect::<Result<_>>()?;
            let (mean_ssim, mean_mse, mean_psnr) = score_reconstructions(&test_plain, &recon)?;
            let dumped = match &cfg.dump_dir {
                Some(dir) => dump_triptychs(dir, policy, cipher_cfg, &test_plain, &test_enc, &recon, cfg.dump_count)?,
                None => Vec::new(),
            };

            rows.push(ReportRow {
                policy,
                cipher: cipher_cfg,
                mean_ssim,
                mean_mse,
                mean_psnr,
                n_test: recon.len(),
                loss_history,
                dumped,
            });
        }
    }
    Ok(ExperimentReport { rows })
}

/// Formats `x` with `digits` significant digits in positional notation.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return format!("{:.*}", digits.saturating_sub(1), 0.0);
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit (9.999995 -> 10.00000)
    let rounded: f64 = s.parse().unwrap_or(x);
    if rounded != 0.0 && rounded.abs().log10().floor() as i64 > magnitude && decimals > 0 {
        format!("{x:.*}", decimals - 1)
    } else {
        s
    }
}

pub const REPORT_HEADER: &str = "policy,steps,mean_ssim,mean_mse,mean_psnr,n_test";

/// Report as CSV text, one line per cell.
pub fn report_csv(rep: &ExperimentReport) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in &rep.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.policy.name(),
            r.cipher.steps_label(),
            format_significant(r.mean_ssim, 6),
            format_significant(r.mean_mse, 6),
            format_significant(r.mean_psnr, 6),
            r.n_test
        );
    }
    out
}

/// Per-epoch training loss of every cell as CSV.
pub fn loss_history_csv(rep: &ExperimentReport) -> String {
    let mut out = String::from("policy,steps,epoch,mean_loss\n");
    for r in &rep.rows {
        for (e, loss) in r.loss_history.iter().enumerate() {
            let _ =
                writeln!(out, "{},{},{e},{}", r.policy.name(), r.cipher.steps_label(), format_significant(*loss, 6));
        }
    }
    out
}

pub fn write_report(rep: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, report_csv(rep))?;
    Ok(())
}
