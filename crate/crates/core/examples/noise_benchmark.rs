// Dominant-bin stability of WHOG and HOG on a noisy step edge.
//
//     cargo run --release --example noise_benchmark

use std::path::Path;

use wlia::bench::{bench_noise, BenchSettings};
use wlia::cli::DEFAULT_SIGMAS;
use wlia::synth::step_patch;

pub fn run(_out: &Path) -> wlia::Result<()> {
    let settings = BenchSettings {
        side: 8,
        stride: 8,
        n_bins: 9,
        trials: 40,
        seed: 1,
    };
    let rows = bench_noise(&step_patch(8), &DEFAULT_SIGMAS, &settings)?;
    println!("{:>6} {:>5} {:>10} {:>8}", "sigma", "", "stability", "entropy");
    for r in &rows {
        println!(
            "{:>6} {:>5} {:>10.2} {:>8.3}",
            r.sigma,
            r.method.name(),
            r.stability,
            r.mean_entropy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    run(Path::new("."))
}
