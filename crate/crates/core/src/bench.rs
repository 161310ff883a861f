//! Noise-robustness benchmark of WHOG against HOG.
//!
//! For every noise level, each trial adds seeded Gaussian noise (clamped at
//! zero) to the input, computes the pooled histogram of both methods on the
//! same noisy image, and checks whether the dominant bin matches the one of
//! the clean image.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::histogram_entropy;
use crate::error::{Error, Result};
use crate::histogram::DirectionHistogram;
use crate::hog::hog_image;
use crate::image::GrayImage;
use crate::synth::noisy;
use crate::whog::whog_image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Whog,
    Hog,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Whog, Method::Hog];

    pub fn name(self) -> &'static str {
        match self {
            Method::Whog => "whog",
            Method::Hog => "hog",
        }
    }

    /// Sum of the raw patch histograms over the tiling.
    pub fn pooled_histogram(
        self,
        image: &GrayImage,
        side: usize,
        stride: usize,
        n_bins: usize,
    ) -> Result<DirectionHistogram> {
        let hists: Vec<DirectionHistogram> = match self {
            Method::Whog => whog_image(image, side, stride, n_bins)?
                .into_iter()
                .map(|p| p.histogram)
                .collect(),
            Method::Hog => hog_image(image, side, stride, n_bins)?
                .cells
                .into_iter()
                .map(|p| p.histogram)
                .collect(),
        };
        DirectionHistogram::pooled(&hists)
    }
}

/// Mixes a base seed with two indices (splitmix64 finalizer) so every
/// `(sigma, trial)` pair gets an independent stream.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchSettings {
    pub side: usize,
    pub stride: usize,
    pub n_bins: usize,
    pub trials: usize,
    pub seed: u64,
}

/// One `(sigma, method)` row of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub sigma: f64,
    pub method: Method,
    pub trials: usize,
    /// Fraction of trials whose dominant bin equals the clean image's.
    pub stability: f64,
    /// Mean entropy (bits) of the normalized pooled histogram over trials
    /// with non-zero mass.
    pub mean_entropy: Option<f64>,
    /// Mean of the per-trial normalized pooled histograms.
    pub mean_histogram: Vec<f64>,
}

/// Pooled histograms of both methods for one noisy realization.
pub fn trial_histograms(
    image: &GrayImage,
    sigma: f64,
    seed: u64,
    settings: &BenchSettings,
) -> Result<[DirectionHistogram; 2]> {
    let noisy_image = noisy(image, sigma, seed)?;
    let whog = Method::Whog.pooled_histogram(&noisy_image, settings.side, settings.stride, settings.n_bins)?;
    let hog = Method::Hog.pooled_histogram(&noisy_image, settings.side, settings.stride, settings.n_bins)?;
    Ok([whog, hog])
}

pub fn bench_noise(image: &GrayImage, sigmas: &[f64], settings: &BenchSettings) -> Result<Vec<NoiseRow>> {
    if settings.trials == 0 {
        return Err(Error::invalid("trial count must be at least 1"));
    }
    if sigmas.iter().any(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::invalid("noise sigmas must be non-negative"));
    }
    let [whog_clean, hog_clean] = Method::ALL.map(|m| {
        m.pooled_histogram(image, settings.side, settings.stride, settings.n_bins)
            .map(|h| h.argmax())
    });
    let clean_argmax = [whog_clean?, hog_clean?];

    let mut rows = Vec::with_capacity(sigmas.len() * 2);
    for (si, &sigma) in sigmas.iter().enumerate() {
        let trials: Vec<[DirectionHistogram; 2]> = (0..settings.trials)
            .into_par_iter()
            .map(|t| trial_histograms(image, sigma, derive_seed(settings.seed, si as u64, t as u64), settings))
            .collect::<Result<_>>()?;
        for (mi, method) in Method::ALL.into_iter().enumerate() {
            let mut stable = 0;
            let mut entropy_sum = 0.0;
            let mut entropy_count = 0;
            let mut mean = vec![0.0; settings.n_bins];
            for hists in &trials {
                let h = &hists[mi];
                if h.argmax() == clean_argmax[mi] {
                    stable += 1;
                }
                if let Ok(e) = histogram_entropy(h) {
                    entropy_sum += e;
                    entropy_count += 1;
                    let total = h.total();
                    for (m, b) in mean.iter_mut().zip(h.bins()) {
                        *m += b / total;
                    }
                }
            }
            let n = settings.trials as f64;
            mean.iter_mut().for_each(|m| *m /= n);
            rows.push(NoiseRow {
                sigma,
                method,
                trials: settings.trials,
                stability: stable as f64 / n,
                mean_entropy: (entropy_count > 0).then(|| entropy_sum / entropy_count as f64),
                mean_histogram: mean,
            });
        }
    }
    Ok(rows)
}
