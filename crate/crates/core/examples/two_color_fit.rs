// Nearest two-color patch of a noisy 3x3 edge patch and the per-pixel
// transport work against it.
//
//     cargo run --example two_color_fit

use std::path::Path;

use wlia::two_color::{fit_two_color, noise_scores_with, NoiseReference};
use wlia::PatchGrid;

pub fn run(_out: &Path) -> wlia::Result<()> {
    let patch = PatchGrid::new(3, vec![0.21, 0.78, 0.74, 0.27, 0.69, 0.81, 0.24, 0.77, 0.72])?;
    let model = fit_two_color(&patch)?;
    println!("levels a = {:.4}, b = {:.4}, contrast {:.4}", model.level_a(), model.level_b(), model.contrast());
    println!("W1 to the fit = {:.5}", model.distance());
    for row in model.mask().chunks(3) {
        println!("  {}", row.iter().map(|&z| if z { 'a' } else { 'b' }).collect::<String>());
    }

    // An impulse in a flat patch: against the uniform patch all the work
    // touches the bright pixel.
    let mut px = vec![1.0; 9];
    px[4] = 5.0;
    let impulse = PatchGrid::new(3, px)?;
    let m = fit_two_color(&impulse)?;
    let scores = noise_scores_with(&impulse, &m, NoiseReference::Uniform)?;
    println!("impulse scores vs uniform: {:.3?}", scores.scores);
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    run(Path::new("."))
}
