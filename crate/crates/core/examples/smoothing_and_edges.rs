// Two-color smoothing and edge detection on a noisy step image, scored
// against the known edge.
//
//     cargo run --release --example smoothing_and_edges -- [OUT_DIR]

use std::fs;
use std::path::{Path, PathBuf};

use wlia::io::save_image;
use wlia::synth::{noisy, step_edge};
use wlia::two_color::{edge_map, otsu_threshold, score_edges, smooth_image, threshold_map};
use wlia::GrayImage;

pub fn run(out: &Path) -> wlia::Result<()> {
    let image = noisy(&step_edge(32, 32, 16, 0.0, 1.0)?, 0.1, 7)?;
    let smooth = smooth_image(&image, 3, 2)?;
    let edges = edge_map(&image, 3, 2)?;
    let t = otsu_threshold(edges.pixels());
    let binary = threshold_map(&edges, t);

    let truth = GrayImage::from_fn(32, 32, |_, c| if c == 15 || c == 16 { 1.0 } else { 0.0 })?;
    let score = score_edges(&binary, &truth, 1)?;
    println!("otsu threshold {t:.3}: precision {:.3}, recall {:.3}", score.precision, score.recall);

    let spread = |img: &GrayImage| {
        let v: Vec<f64> = (0..32).flat_map(|r| (20..32).map(move |c| (r, c))).map(|(r, c)| img.get(r, c)).collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
    };
    println!("bright-region std {:.4} -> {:.4}", spread(&image), spread(&smooth));

    fs::create_dir_all(out)?;
    let scale = |img: &GrayImage| {
        GrayImage::from_clamped(32, 32, img.pixels().iter().map(|p| p * 255.0).collect())
            .map(|g| g.with_depth(wlia::image::SampleDepth::Eight, 255))
    };
    save_image(out.join("noisy.png"), &scale(&image)?)?;
    save_image(out.join("smoothed.png"), &scale(&smooth)?)?;
    save_image(out.join("edges.png"), &scale(&binary)?)?;
    println!("wrote noisy.png, smoothed.png, edges.png to {}", out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wlia-examples"));
    run(&out)
}
