// WHOG histograms of a step edge and of diagonal stripes, written as rose
// plots.
//
//     cargo run --example whog_rose -- [OUT_DIR]

use std::fs;
use std::path::{Path, PathBuf};

use wlia::histogram::DirectionHistogram;
use wlia::plot::{rose_grid_svg, AngleReference, RosePanel};
use wlia::synth::step_patch;
use wlia::whog::{whog_image, Whog};
use wlia::GrayImage;

pub fn run(out: &Path) -> wlia::Result<()> {
    let whog = Whog::new(8, 9)?;

    let step = whog.analyze(&step_patch(8).patch((0, 0), 8)?)?;
    println!("step edge: W1 = {:.4}, bins = {:.4?}", step.distance, step.histogram.bins());
    println!("dominant bin {:?} (routes run across the edge)", step.histogram.argmax());

    // Stripes along the anti-diagonal; 64x64 tiled into 64 patches.
    let stripes = GrayImage::from_fn(64, 64, |r, c| 0.5 + 0.4 * (((r + c) as f64) * 0.9).sin())?;
    let cells = whog_image(&stripes, 8, 8, 9)?;
    let pooled = DirectionHistogram::pooled(cells.iter().map(|c| &c.histogram))?;
    println!("stripes pooled over {} patches: {:.3?}", cells.len(), pooled.bins());

    let panels = [
        RosePanel {
            title: "step edge".into(),
            histogram: step.histogram,
            reference: AngleReference::RowAxis,
        },
        RosePanel {
            title: "diagonal stripes".into(),
            histogram: pooled,
            reference: AngleReference::RowAxis,
        },
    ];
    fs::create_dir_all(out)?;
    let path = out.join("whog_rose.svg");
    fs::write(&path, rose_grid_svg(&panels, 2))?;
    println!("wrote {}", path.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("wlia-examples"));
    run(&out)
}
