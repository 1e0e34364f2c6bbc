//! Acceptance suite: one PASS/FAIL/SKIP line per criterion, nonzero exit on
//! any failure.
//!
//! The full-scale STL-10 run only happens when `PIXELCRYPT_STL10_DIR` points
//! at the `stl10_binary` directory.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pixelcrypt::attack::{backward, construct_inversion_network, forward, loss_mse, reconstruct, ArchConfig};
use pixelcrypt::cipher::{
    decrypt, encrypt, negpos_transform, permute_pixel, EncryptionConfig, INVERSE_PERMUTATION, PERMUTATIONS,
};
use pixelcrypt::harness::{report_csv, run_experiment, ExperimentConfig, ExperimentReport};
use pixelcrypt::keygen::{derive_keystream, KeyPolicy, MasterKey, SplitMix64};
use pixelcrypt::keyspace::{enumerate_keystreams, keyspace_bits};
use pixelcrypt::metrics::{ssim, SsimParams};
use pixelcrypt::synth::synthetic_images;
use pixelcrypt::Image;

mod common;
use common::{central_differences, max_relative_error, random_image, random_network};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(pass: bool, detail: String) -> Verdict {
    if pass {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn cipher_round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = SplitMix64::new(0xC1);
    let mut failures = 0;
    for _ in 0..1000 {
        let w = 1 + rng.next_below(64) as usize;
        let h = 1 + rng.next_below(64) as usize;
        let img = random_image(&mut rng, w, h);
        let ks = derive_keystream(MasterKey::new(rng.next_u64()), rng.next_below(1 << 20), w, h).unwrap();
        let cfg = EncryptionConfig { use_color_shuffle: rng.next_below(2) == 1 };
        let enc = encrypt(&img, &ks, cfg).unwrap();
        let twice = negpos_transform(&negpos_transform(&img, &ks).unwrap(), &ks).unwrap();
        if decrypt(&enc, &ks, cfg).unwrap() != img || twice != img {
            failures += 1;
        }
    }
    let t = start.elapsed();
    check(
        failures == 0 && t < Duration::from_secs(10),
        format!("1000 random triples, {failures} failures, {:.2} s (limit 10 s)", secs(t)),
    )
}

fn table_fidelity() -> Verdict {
    // row k: which input channel (R=0, G=1, B=2) lands in output R, G, B
    let table = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let rows_match = PERMUTATIONS == table;
    let example = permute_pixel([10, 20, 30], 2) == [20, 10, 30];
    let inverses = (0..6).all(|k| {
        let p = [11u8, 22, 33];
        permute_pixel(permute_pixel(p, k), INVERSE_PERMUTATION[k]) == p
    });
    let swap = INVERSE_PERMUTATION[3] == 4
        && INVERSE_PERMUTATION[4] == 3
        && (0..6).filter(|&k| k != 3 && k != 4).all(|k| INVERSE_PERMUTATION[k] == k);
    check(
        rows_match && example && inverses && swap,
        format!("rows {rows_match}, integer-2 example {example}, inverses {inverses}, 3<->4 {swap}"),
    )
}

fn keyspace_size() -> Verdict {
    let one = keyspace_bits(1, EncryptionConfig::with_shuffle()).log2_total;
    let counts = [
        enumerate_keystreams(1, EncryptionConfig::negpos_only()).unwrap().len(),
        enumerate_keystreams(1, EncryptionConfig::with_shuffle()).unwrap().len(),
        enumerate_keystreams(2, EncryptionConfig::with_shuffle()).unwrap().len(),
    ];
    let big = keyspace_bits(9216, EncryptionConfig::with_shuffle()).log2_total;
    let expected = 27648.0 + 9216.0 * 6f64.log2();
    let rel = (big - expected).abs() / expected;
    check(
        (one - 48f64.log2()).abs() < 1e-9 && counts == [8, 48, 2304] && rel < 1e-6,
        format!("log2 keys(n=1) = {one:.12}, counts {counts:?}, 96x96 = {big:.6} (rel err {rel:.1e})"),
    )
}

fn gradient_oracle() -> Verdict {
    let start = Instant::now();
    let arch = ArchConfig::new(4, 5, 3).unwrap();
    let mut rng = SplitMix64::new(0x6AD);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let w = 1 + rng.next_below(4) as usize;
        let h = 1 + rng.next_below(4) as usize;
        let net = random_network(&mut rng, w, h, arch);
        let input = random_image(&mut rng, w, h);
        let target = random_image(&mut rng, w, h);
        let grads = backward(&net, &forward(&net, &input).unwrap(), &target).unwrap();
        let numeric = central_differences(&net, &input, &target, 1e-4);
        worst = worst.max(max_relative_error(grads.values(), &numeric));
    }
    let t = start.elapsed();
    check(
        worst < 1e-4 && t < Duration::from_secs(30),
        format!("20 instances, max relative error {worst:.2e} (limit 1e-4), {:.2} s (limit 30 s)", secs(t)),
    )
}

fn capacity_oracle() -> Verdict {
    let mut rng = SplitMix64::new(0xCA9);
    let mut fixtures = synthetic_images(31, 0, 6, 24).unwrap();
    fixtures.extend((0..4).map(|_| random_image(&mut rng, 24, 24)));
    let mut worst_loss = 0.0f64;
    let mut exact = true;
    for (cfg, seed) in [(EncryptionConfig::negpos_only(), 101u64), (EncryptionConfig::with_shuffle(), 202)] {
        let ks = derive_keystream(MasterKey::new(seed), 0, 24, 24).unwrap();
        let net = construct_inversion_network(24, 24, ArchConfig::reference(), &ks, cfg).unwrap();
        for img in &fixtures {
            let enc = encrypt(img, &ks, cfg).unwrap();
            worst_loss = worst_loss.max(loss_mse(forward(&net, &enc).unwrap().output(), img).unwrap());
            exact &= reconstruct(&net, &enc).unwrap() == *img;
        }
    }
    check(
        worst_loss < 1e-24 && exact,
        format!("10 fixtures x 2 ciphers, max loss {worst_loss:.1e}, bit-exact reconstruction {exact}"),
    )
}

struct DeskRun {
    report: ExperimentReport,
    csv: String,
    elapsed: Duration,
}

fn desk_run() -> &'static DeskRun {
    static RUN: OnceLock<DeskRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let report = run_experiment(&ExperimentConfig::desk()).expect("desk experiment");
        let csv = report_csv(&report);
        DeskRun { report, csv, elapsed: start.elapsed() }
    })
}

fn ssim_gap(report: &ExperimentReport, cipher: EncryptionConfig) -> (f64, f64) {
    let same = report.row(KeyPolicy::SameKey, cipher).expect("same-key row").mean_ssim;
    let per = report.row(KeyPolicy::PerImageKeys, cipher).expect("per-image row").mean_ssim;
    (same, per)
}

fn desk_table() -> Verdict {
    let run = desk_run();
    let mut pass = run.elapsed < Duration::from_secs(15 * 60);
    let mut parts = Vec::new();
    for cipher in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
        let (same, per) = ssim_gap(&run.report, cipher);
        pass &= same >= 2.0 * per && per < 0.15;
        parts.push(format!("step {}: same {same:.4} vs per-image {per:.4}", cipher.steps_label()));
    }
    check(pass, format!("{}, {:.0} s (limit 900 s)", parts.join("; "), secs(run.elapsed)))
}

fn full_scale() -> Verdict {
    let Some(dir) = std::env::var_os("PIXELCRYPT_STL10_DIR") else {
        return Verdict::Skip("set PIXELCRYPT_STL10_DIR to the stl10_binary directory to run".into());
    };
    let start = Instant::now();
    let report = match run_experiment(&ExperimentConfig::full_scale(&dir)) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("experiment failed: {e}")),
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for cipher in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
        let (same, per) = ssim_gap(&report, cipher);
        pass &= same - per >= 0.08;
        parts.push(format!("step {}: same {same:.4} vs per-image {per:.4}", cipher.steps_label()));
    }
    check(pass, format!("{}, gap limit 0.08, {:.0} s", parts.join("; "), secs(start.elapsed())))
}

fn determinism() -> Verdict {
    let first = &desk_run().csv;
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| report_csv(&run_experiment(&ExperimentConfig::desk()).unwrap()))
    };
    let one = in_pool(1);
    let three = in_pool(3);
    check(
        *first == one && one == three,
        format!(
            "desk report CSV byte-identical across default pool, 1 thread and 3 threads: {}",
            *first == one && one == three
        ),
    )
}

fn ssim_oracle() -> Verdict {
    let p = SsimParams::default();
    let img = synthetic_images(41, 0, 1, 32).unwrap().remove(0);
    let self_err = (ssim(&img, &img, &p).unwrap() - 1.0).abs();
    let a = Image::filled(16, 16, 100).unwrap();
    let b = Image::filled(16, 16, 155).unwrap();
    let c1 = p.c1();
    let closed_form = (2.0 * 100.0 * 155.0 + c1) / (100.0f64.powi(2) + 155.0f64.powi(2) + c1);
    let constant = ssim(&a, &b, &p).unwrap();
    check(
        self_err < 1e-12 && (constant - 0.9111).abs() < 1e-4 && (constant - closed_form).abs() < 1e-12,
        format!("|ssim(x,x) - 1| = {self_err:.1e}, ssim(100, 155) = {constant:.10}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "cipher correctness", cipher_round_trip),
        (2, "permutation table", table_fidelity),
        (3, "key space", keyspace_size),
        (4, "gradient oracle", gradient_oracle),
        (5, "capacity oracle", capacity_oracle),
        (6, "desk key-policy gap", desk_table),
        (7, "full-scale key-policy gap", full_scale),
        (8, "report determinism", determinism),
        (9, "ssim oracle", ssim_oracle),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {id} {name}: {detail}");
    }
    if failed == 0 {
        println!("acceptance: all criteria met");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
