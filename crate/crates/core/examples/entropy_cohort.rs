// Directionality entropy of a synthetic cohort, median split and log-rank
// test. Textured samples are given a higher hazard than striped ones.
//
//     cargo run --release --example entropy_cohort

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wlia::analysis::{logrank_test, median_groups, roi_sample, SurvivalRecord};
use wlia::synth::{isotropic_texture, stripes, survival_time};
use wlia::whog::Whog;
use wlia::GrayImage;

pub fn run(_out: &Path) -> wlia::Result<()> {
    let whog = Whog::new(8, 9)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mask = GrayImage::filled(32, 32, 1.0)?;

    let mut entropies = Vec::new();
    let mut outcomes = Vec::new();
    for i in 0..30u64 {
        let textured = i % 2 == 0;
        let image = if textured {
            isotropic_texture(32, 0.5, 0.45, i)?
        } else {
            stripes(32, 6.0, 0.5, 0.4)?
        };
        let sample = roi_sample(format!("s{i}"), &image, &mask, 8, &whog, i)?;
        entropies.push(sample.entropy);
        outcomes.push(survival_time(if textured { 3.0 } else { 1.0 }, 0.1, &mut rng));
    }
    println!("entropy range {:.3} .. {:.3} bits", 
        entropies.iter().cloned().fold(f64::INFINITY, f64::min),
        entropies.iter().cloned().fold(0.0, f64::max));

    let groups = median_groups(&entropies)?;
    let records: Vec<_> = groups
        .iter()
        .zip(&outcomes)
        .enumerate()
        .map(|(i, (&group, &(time, event)))| SurvivalRecord {
            sample_id: format!("s{i}"),
            time,
            event,
            group,
        })
        .collect();
    let result = logrank_test(&records)?;
    println!("log-rank chi2 = {:.3}, p = {:.2e}", result.chi_square, result.p_value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    run(Path::new("."))
}
