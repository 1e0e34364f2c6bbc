//! Command-line front end for the `pixelcrypt` binary.
//!
//! Exit codes: 0 on success, 1 on a domain error, 2 on a usage error.
//! Diagnostics go to stderr, data to stdout (or the requested files).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::attack::{self, ArchConfig, LrScaling, TrainConfig};
use crate::cipher::{self, EncryptionConfig};
use crate::error::{Error, Result};
use crate::harness::{self, ExperimentConfig, ExperimentReport, ReportRow};
use crate::image_io::{self, Image};
use crate::keygen::{self, parse_seed, KeyPolicy, MasterKey};
use crate::keyspace::{self, KeySpaceReport};

#[derive(Debug, Parser)]
#[command(name = "pixelcrypt", version, about = "Pixel-based image cipher and learned reconstruction attack")]
pub struct Cli {
    /// Worker threads (results do not depend on this value)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Encrypt a PPM image
    Encrypt(CipherArgs),
    /// Decrypt a PPM image
    Decrypt(CipherArgs),
    /// Print brute-force key-space sizes as CSV
    Keyspace(KeyspaceArgs),
    /// Train the reconstruction network on encrypted/plaintext pairs
    AttackTrain(TrainArgs),
    /// Reconstruct encrypted test images with a trained network
    AttackEval(EvalArgs),
    /// Run the full key-policy experiment from a configuration file
    Experiment(ExperimentArgs),
}

fn seed_arg(s: &str) -> std::result::Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

fn policy_arg(s: &str) -> std::result::Result<KeyPolicy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn scaling_arg(s: &str) -> std::result::Result<LrScaling, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct CipherArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed, decimal or 0x-hex
    #[arg(long, value_parser = seed_arg)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub image_index: u64,
    /// Also shuffle color components
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Debug, Args)]
pub struct KeyspaceArgs {
    #[arg(long)]
    pub width: usize,
    #[arg(long)]
    pub height: usize,
    #[arg(long)]
    pub shuffle: bool,
    /// Append the exact key-space size (n ≤ 64 only)
    #[arg(long)]
    pub exact: bool,
}

/// Dataset selection shared by training and evaluation.
#[derive(Debug, Args)]
pub struct DataArgs {
    /// Maximum number of images to load
    #[arg(long)]
    pub count: Option<usize>,
    /// Center-crop every image to this size
    #[arg(long)]
    pub crop: Option<usize>,
    #[arg(long, value_parser = seed_arg)]
    pub seed: u64,
    #[arg(long, value_parser = policy_arg, default_value = "same")]
    pub policy: KeyPolicy,
    #[arg(long)]
    pub shuffle: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of PPM files or an STL-10 *_X.bin file
    #[arg(long)]
    pub train_dir: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 70)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Comma-separated epochs at which the learning rate drops
    #[arg(long, value_delimiter = ',', default_values_t = [40usize, 60])]
    pub lr_drop_epochs: Vec<usize>,
    #[arg(long, default_value_t = 0.1)]
    pub lr_drop_factor: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long, value_parser = scaling_arg, default_value = "global")]
    pub lr_scaling: LrScaling,
    /// Seed for weight initialization and batch order
    #[arg(long, value_parser = seed_arg, default_value = "0")]
    pub train_seed: u64,
    #[arg(long, default_value_t = 8)]
    pub m1: usize,
    #[arg(long, default_value_t = 32)]
    pub m2: usize,
    /// Write the per-epoch training loss here as CSV
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub net: PathBuf,
    /// Directory of PPM files or an STL-10 *_X.bin file
    #[arg(long)]
    pub test_dir: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Key index of the first test image under per-image keys
    /// (use the training-set size so test keys are unseen)
    #[arg(long, default_value_t = 0)]
    pub index_offset: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub dump_count: usize,
}

/// Every configuration key can be overridden by the flag of the same name.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report CSV here instead of stdout
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write per-epoch training losses here as CSV
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<String>,
    /// true|false|both; a bare flag means true
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub shuffle: Option<String>,
    #[arg(long, alias = "dump_dir")]
    pub dump_dir: Option<String>,
    #[arg(long, alias = "dump_count")]
    pub dump_count: Option<String>,
    #[arg(long, alias = "train_count")]
    pub train_count: Option<String>,
    #[arg(long, alias = "test_count")]
    pub test_count: Option<String>,
    #[arg(long)]
    pub crop: Option<String>,
    #[arg(long)]
    pub m1: Option<String>,
    #[arg(long)]
    pub m2: Option<String>,
    #[arg(long)]
    pub m3: Option<String>,
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long, alias = "base_lr")]
    pub base_lr: Option<String>,
    #[arg(long, alias = "lr_drop_epochs")]
    pub lr_drop_epochs: Option<String>,
    #[arg(long, alias = "lr_drop_factor")]
    pub lr_drop_factor: Option<String>,
    #[arg(long)]
    pub momentum: Option<String>,
    #[arg(long, alias = "weight_decay")]
    pub weight_decay: Option<String>,
    #[arg(long, alias = "batch_size")]
    pub batch_size: Option<String>,
    #[arg(long, alias = "train_seed")]
    pub train_seed: Option<String>,
    #[arg(long, alias = "lr_scaling")]
    pub lr_scaling: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long, alias = "train_path")]
    pub train_path: Option<String>,
    #[arg(long, alias = "test_path")]
    pub test_path: Option<String>,
    #[arg(long, alias = "synth_seed")]
    pub synth_seed: Option<String>,
    #[arg(long, alias = "synth_size")]
    pub synth_size: Option<String>,
}

impl ExperimentArgs {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 25] = [
            ("policy", &self.policy),
            ("shuffle", &self.shuffle),
            ("dump_dir", &self.dump_dir),
            ("dump_count", &self.dump_count),
            ("train_count", &self.train_count),
            ("test_count", &self.test_count),
            ("crop", &self.crop),
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("m3", &self.m3),
            ("epochs", &self.epochs),
            ("base_lr", &self.base_lr),
            ("lr_drop_epochs", &self.lr_drop_epochs),
            ("lr_drop_factor", &self.lr_drop_factor),
            ("momentum", &self.momentum),
            ("weight_decay", &self.weight_decay),
            ("batch_size", &self.batch_size),
            ("train_seed", &self.train_seed),
            ("lr_scaling", &self.lr_scaling),
            ("seed", &self.seed),
            ("source", &self.source),
            ("train_path", &self.train_path),
            ("test_path", &self.test_path),
            ("synth_seed", &self.synth_seed),
            ("synth_size", &self.synth_size),
        ];
        fields.into_iter().filter_map(|(k, v)| v.as_deref().map(|v| (k, v))).collect()
    }
}

/// Parses `argv` without the program name.
pub fn parse_args<I, T>(argv: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(std::iter::once(OsString::from("pixelcrypt")).chain(argv.into_iter().map(Into::into)))
}

fn cipher_cfg(shuffle: bool) -> EncryptionConfig {
    EncryptionConfig { use_color_shuffle: shuffle }
}

fn run_cipher(args: &CipherArgs, decrypt: bool) -> Result<()> {
    let img = image_io::load_ppm(&args.input)?;
    let ks = keygen::derive_keystream(MasterKey::new(args.seed), args.image_index, img.width(), img.height())?;
    let cfg = cipher_cfg(args.shuffle);
    let out = if decrypt { cipher::decrypt(&img, &ks, cfg)? } else { cipher::encrypt(&img, &ks, cfg)? };
    image_io::save_ppm(&out, &args.out)
}

fn run_keyspace(args: &KeyspaceArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let n = keyspace::pixel_count(args.width, args.height)?;
    let cfg = cipher_cfg(args.shuffle);
    let report: KeySpaceReport = keyspace::keyspace_bits(n, cfg);
    if args.exact {
        let exact = keyspace::keyspace_exact(n, cfg)?;
        writeln!(out, "{},exact", KeySpaceReport::CSV_HEADER)?;
        writeln!(out, "{},{exact}", report.csv_row())?;
    } else {
        writeln!(out, "{}", KeySpaceReport::CSV_HEADER)?;
        writeln!(out, "{}", report.csv_row())?;
    }
    Ok(())
}

fn load_data(path: &PathBuf, data: &DataArgs) -> Result<Vec<Image>> {
    let imgs = image_io::load_images(path, data.count.unwrap_or(usize::MAX))?;
    if imgs.is_empty() {
        return Err(Error::Argument(format!("no images found in {}", path.display())));
    }
    match data.crop {
        Some(size) => imgs.iter().map(|img| image_io::center_crop(img, size)).collect(),
        None => Ok(imgs),
    }
}

fn key_indices(policy: KeyPolicy, count: usize, offset: u64) -> Vec<u64> {
    match policy {
        KeyPolicy::SameKey => vec![0; count],
        KeyPolicy::PerImageKeys => (0..count as u64).map(|i| offset + i).collect(),
    }
}

fn run_train(args: &TrainArgs, err: &mut (dyn Write + Send)) -> Result<()> {
    let plain = load_data(&args.train_dir, &args.data)?;
    let master = MasterKey::new(args.data.seed);
    let indices = key_indices(args.data.policy, plain.len(), 0);
    let enc = harness::encrypt_dataset(&plain, &indices, master, cipher_cfg(args.data.shuffle))?;
    let cfg = TrainConfig {
        epochs: args.epochs,
        base_lr: args.lr,
        lr_drop_epochs: args.lr_drop_epochs.iter().copied().filter(|&e| e < args.epochs).collect(),
        lr_drop_factor: args.lr_drop_factor,
        momentum: args.momentum,
        weight_decay: args.weight_decay,
        batch_size: args.batch_size,
        seed: args.train_seed,
        lr_scaling: args.lr_scaling,
    };
    let arch = ArchConfig::new(args.m1, args.m2, 3)?;
    let net = attack::init_network(plain[0].width(), plain[0].height(), arch, cfg.seed)?;
    let pairs: Vec<(Image, Image)> = enc.into_iter().zip(plain).collect();
    let (net, history) = attack::train(net, &pairs, &cfg)?;
    if let Some(last) = history.last() {
        writeln!(err, "trained {} epochs on {} images, final loss {last:.6e}", cfg.epochs, pairs.len())?;
    }
    if let Some(path) = &args.loss_csv {
        let mut csv = String::from("epoch,mean_loss\n");
        for (e, l) in history.iter().enumerate() {
            csv.push_str(&format!("{e},{}\n", harness::format_significant(*l, 6)));
        }
        std::fs::write(path, csv)?;
    }
    attack::save_network(&net, &args.out)
}

fn run_eval(args: &EvalArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    use rayon::prelude::*;

    let net = attack::load_network(&args.net)?;
    let plain = load_data(&args.test_dir, &args.data)?;
    let master = MasterKey::new(args.data.seed);
    let cfg = cipher_cfg(args.data.shuffle);
    let indices = key_indices(args.data.policy, plain.len(), args.index_offset);
    let enc = harness::encrypt_dataset(&plain, &indices, master, cfg)?;
    let recon: Vec<Image> = enc.par_iter().map(|e| attack::reconstruct(&net, e)).collect::<Result<_>>()?;
    let (mean_ssim, mean_mse, mean_psnr) = harness::score_reconstructions(&plain, &recon)?;
    let mut dumped = Vec::new();
    if let Some(dir) = &args.dump_dir {
        dumped = harness::dump_triptychs(dir, args.data.policy, cfg, &plain, &enc, &recon, args.dump_count)?;
    }
    let report = ExperimentReport {
        rows: vec![ReportRow {
            policy: args.data.policy,
            cipher: cfg,
            mean_ssim,
            mean_mse,
            mean_psnr,
            n_test: plain.len(),
            loss_history: Vec::new(),
            dumped,
        }],
    };
    match &args.report {
        Some(path) => harness::write_report(&report, path),
        None => Ok(out.write_all(harness::report_csv(&report).as_bytes())?),
    }
}

fn run_experiment(args: &ExperimentArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::desk(),
    };
    cfg.apply_overrides(args.overrides())?;
    let report = harness::run_experiment(&cfg)?;
    if let Some(path) = &args.loss_csv {
        std::fs::write(path, harness::loss_history_csv(&report))?;
    }
    match &args.report {
        Some(path) => harness::write_report(&report, path),
        None => Ok(out.write_all(harness::report_csv(&report).as_bytes())?),
    }
}

/// Executes a parsed command, writing data to `out` and progress to `err`.
pub fn run(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<()> {
    let dispatch = |out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)| match &cli.command {
        Command::Encrypt(a) => run_cipher(a, false),
        Command::Decrypt(a) => run_cipher(a, true),
        Command::Keyspace(a) => run_keyspace(a, out),
        Command::AttackTrain(a) => run_train(a, err),
        Command::AttackEval(a) => run_eval(a, out),
        Command::Experiment(a) => run_experiment(a, out),
    };
    match cli.threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| Error::Argument(e.to_string()))?;
            pool.install(|| dispatch(out, err))
        }
        None => dispatch(out, err),
    }
}

/// Parses and runs `argv` (without the program name), returning the exit code.
pub fn main_with_args<I, T>(argv: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = err.write_all(rendered.as_bytes());
            } else {
                let _ = out.write_all(rendered.as_bytes());
            }
            return code;
        }
    };
    match run(&cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(e, Error::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_encrypt() {
        let cli = parse_args(["encrypt", "--in", "a.ppm", "--out", "b.ppm", "--seed", "7"]).unwrap();
        match cli.command {
            Command::Encrypt(a) => {
                assert_eq!(a.seed, 7);
                assert_eq!(a.image_index, 0);
                assert!(!a.shuffle);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parses_keyspace_and_hex_seed() {
        let cli = parse_args(["keyspace", "--width", "96", "--height", "96", "--shuffle"]).unwrap();
        assert!(matches!(cli.command, Command::Keyspace(KeyspaceArgs { width: 96, shuffle: true, .. })));
        let cli = parse_args(["decrypt", "--in", "a", "--out", "b", "--seed", "0x1F", "--shuffle"]).unwrap();
        assert!(matches!(cli.command, Command::Decrypt(CipherArgs { seed: 31, shuffle: true, .. })));
    }

    #[test]
    fn rejects_bad_invocations() {
        assert!(parse_args(["bogus"]).is_err());
        assert!(parse_args(["encrypt", "--in", "a.ppm", "--out", "b.ppm"]).is_err());
        assert!(parse_args(["encrypt", "--in", "a", "--out", "b", "--seed", "x"]).is_err());
        assert!(parse_args(["keyspace", "--width", "1", "--height", "1", "--frobnicate"]).is_err());
        assert!(parse_args(Vec::<String>::new()).is_err());
    }

    #[test]
    fn experiment_overrides_collect() {
        let cli = parse_args(["experiment", "--policy", "same", "--shuffle", "--train_count", "10"]).unwrap();
        let Command::Experiment(args) = cli.command else { panic!() };
        let o = args.overrides();
        assert!(o.contains(&("policy", "same")));
        assert!(o.contains(&("shuffle", "true")));
        assert!(o.contains(&("train_count", "10")));
    }

    #[test]
    fn keyspace_csv() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(["keyspace", "--width", "1", "--height", "1", "--shuffle"], &mut out, &mut err);
        assert_eq!(code, 0);
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,log2_np,log2_col,log2_total"));
        let fields: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[0], 1.0);
        assert!((fields[3] - 48f64.log2()).abs() < 1e-12);
    }
}
