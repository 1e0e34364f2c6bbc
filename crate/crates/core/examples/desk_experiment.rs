//! The full key-policy experiment at desk scale: 200 training and 50 test
//! images, 32×32, 30 epochs, every policy and cipher variant.
//!
//! ```text
//! cargo run --release --example desk_experiment -- [dump-dir]
//! ```

use pixelcrypt::cipher::EncryptionConfig;
use pixelcrypt::harness::{report_csv, run_experiment, ExperimentConfig};
use pixelcrypt::keygen::KeyPolicy;

fn main() -> pixelcrypt::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.dump_dir = std::env::args().nth(1).map(Into::into);
    let start = std::time::Instant::now();
    let report = run_experiment(&cfg)?;
    print!("{}", report_csv(&report));

    for cipher in [EncryptionConfig::negpos_only(), EncryptionConfig::with_shuffle()] {
        let same = report.row(KeyPolicy::SameKey, cipher).map(|r| r.mean_ssim);
        let per = report.row(KeyPolicy::PerImageKeys, cipher).map(|r| r.mean_ssim);
        if let (Some(same), Some(per)) = (same, per) {
            println!("steps {}: same-key / per-image ssim ratio {:.1}", cipher.steps_label(), same / per);
        }
    }
    eprintln!("finished in {:.1} s", start.elapsed().as_secs_f64());
    Ok(())
}
