//! Synthetic images and cohorts for benchmarks, examples and tests.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Levels of the step-edge test patch: the full normalized range, so the
/// patch is unchanged by the `[0, 1]` rescaling applied to loaded images.
pub const STEP_DARK: f64 = 0.0;
pub const STEP_BRIGHT: f64 = 1.0;

/// Vertical step edge: columns `< edge_col` are `dark`, the rest `bright`.
pub fn step_edge(width: usize, height: usize, edge_col: usize, dark: f64, bright: f64) -> Result<GrayImage> {
    GrayImage::from_fn(width, height, |_, c| if c < edge_col { dark } else { bright })
}

/// The `side x side` step-edge test patch: left half dark, right half bright.
pub fn step_patch(side: usize) -> GrayImage {
    step_edge(side, side, side / 2, STEP_DARK, STEP_BRIGHT).expect("levels are non-negative")
}

/// Adds i.i.d. Gaussian noise with standard deviation `sigma` and clamps the
/// result at zero.
pub fn add_gaussian_noise(image: &GrayImage, sigma: f64, rng: &mut impl Rng) -> Result<GrayImage> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid("noise sigma must be non-negative"));
    }
    if sigma == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let pixels = image
        .pixels()
        .iter()
        .map(|&p| (p + normal.sample(rng)).max(0.0))
        .collect();
    Ok(GrayImage::new(image.width(), image.height(), pixels)?.with_depth(image.depth(), image.maxval()))
}

/// [`add_gaussian_noise`] with a fresh generator seeded by `seed`.
pub fn noisy(image: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage> {
    add_gaussian_noise(image, sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Vertical sinusoidal stripes, `base + amplitude * sin(2 pi c / period)`.
pub fn stripes(size: usize, period: f64, base: f64, amplitude: f64) -> Result<GrayImage> {
    GrayImage::from_fn(size, size, |_, c| {
        base + amplitude * (2.0 * PI * c as f64 / period).sin()
    })
}

/// Uniform white-noise texture in `[base - spread, base + spread]`.
pub fn isotropic_texture(size: usize, base: f64, spread: f64, seed: u64) -> Result<GrayImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(size, size, |_, _| base + rng.gen_range(-spread..=spread))
}

/// Exponential event time with rate `hazard`, censored by an independent
/// exponential time with rate `censor_hazard` (0 disables censoring).
/// Returns `(time, event_observed)`.
pub fn survival_time(hazard: f64, censor_hazard: f64, rng: &mut impl Rng) -> (f64, bool) {
    let event = Exp::new(hazard).expect("positive hazard").sample(rng);
    if censor_hazard > 0.0 {
        let censor = Exp::new(censor_hazard).expect("positive hazard").sample(rng);
        if censor < event {
            return (censor, false);
        }
    }
    (event, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_layout() {
        let img = step_patch(8);
        assert_eq!(img.get(3, 3), STEP_DARK);
        assert_eq!(img.get(3, 4), STEP_BRIGHT);
    }

    #[test]
    fn noise_is_seeded_and_clamped() {
        let img = GrayImage::filled(16, 16, 0.05).unwrap();
        let a = noisy(&img, 0.3, 7).unwrap();
        assert_eq!(a, noisy(&img, 0.3, 7).unwrap());
        assert!(a.pixels().contains(&0.0));
        assert_eq!(noisy(&img, 0.0, 1).unwrap(), img);
        assert!(noisy(&img, -1.0, 1).is_err());
    }
}
