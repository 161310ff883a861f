// Gradient histograms next to WHOG on the same image, plus 2x2 block
// normalization.
//
//     cargo run --example hog_baseline

use std::path::Path;

use wlia::hog::{block_normalize, gradients, hog_image, hog_patch};
use wlia::synth::step_edge;
use wlia::whog::whog_patch;
use wlia::GrayImage;

pub fn run(_out: &Path) -> wlia::Result<()> {
    // Horizontal ramp: every gradient points along the columns (bin 0).
    let ramp = GrayImage::from_fn(8, 8, |_, c| c as f64)?;
    let h = hog_patch(&gradients(&ramp)?, 9)?;
    println!("ramp HOG: {:.1?}", h.bins());

    let step = step_edge(8, 8, 4, 0.0, 1.0)?;
    let hog = hog_patch(&gradients(&step)?, 9)?;
    let whog = whog_patch(&step.patch((0, 0), 8)?, 9)?;
    // Gradients are measured from the column axis, transport routes from the
    // row axis, so the same edge lands in different bins.
    println!("step HOG argmax {:?}, WHOG argmax {:?}", hog.argmax(), whog.argmax());

    let image = step_edge(32, 32, 13, 0.2, 0.8)?;
    let grid = hog_image(&image, 8, 8, 9)?;
    let hists: Vec<_> = grid.cells.iter().map(|c| c.histogram.clone()).collect();
    let blocks = block_normalize(&hists, grid.rows, grid.cols)?;
    println!("{}x{} cells, {} blocks of {} values", grid.rows, grid.cols, blocks.len(), blocks[0].values.len());
    let norm: f64 = blocks[1].values.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("block {:?} L2 norm {norm:.6}", blocks[1].block);
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    run(Path::new("."))
}
