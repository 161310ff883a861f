// Round-trip 8- and 16-bit grayscale images through PGM and PNG, and show
// what a malformed header reports.
//
//     cargo run --example image_io -- [OUT_DIR]

use std::path::{Path, PathBuf};

use wlia::image::SampleDepth;
use wlia::io::{decode_image, load_image, save_image};
use wlia::GrayImage;

pub fn run(out: &Path) -> wlia::Result<()> {
    std::fs::create_dir_all(out)?;
    let deep = GrayImage::from_fn(16, 16, |r, c| (r * 4096 + c * 17) as f64)?.with_depth(SampleDepth::Sixteen, 65535);
    for name in ["deep.pgm", "deep.png"] {
        let path = out.join(name);
        save_image(&path, &deep)?;
        let back = load_image(&path)?;
        println!("{name}: {:?} maxval {}, identical: {}", back.depth(), back.maxval(), back == deep);
    }

    match decode_image(b"P5\n16 x\n255\n") {
        Err(e) => println!("bad header: {e}"),
        Ok(_) => unreachable!(),
    }
    match decode_image(b"P6\n1 1\n255\n\0\0\0") {
        Err(e) => println!("color file: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wlia-examples"));
    run(&out)
}
