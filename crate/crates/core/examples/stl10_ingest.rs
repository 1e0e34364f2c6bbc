//! Converts the first records of an STL-10 binary file to PPM.
//!
//! ```text
//! cargo run --example stl10_ingest -- stl10_binary/train_X.bin out-dir [count]
//! ```

use pixelcrypt::image_io::{read_stl10_limit, save_ppm};

fn main() -> pixelcrypt::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (Some(input), Some(out)) = (args.first(), args.get(1)) else {
        eprintln!("usage: stl10_ingest <X.bin> <out-dir> [count]");
        std::process::exit(2);
    };
    let count =
        args.get(2).map_or(Ok(8), |c| c.parse()).map_err(|e| pixelcrypt::Error::Argument(format!("count: {e}")))?;
    let bytes = std::fs::read(input)?;
    let images = read_stl10_limit(&bytes, count)?;
    std::fs::create_dir_all(out)?;
    for (i, img) in images.iter().enumerate() {
        save_ppm(img, std::path::Path::new(out).join(format!("stl10_{i:05}.ppm")))?;
    }
    println!("wrote {} images to {out}", images.len());
    Ok(())
}
