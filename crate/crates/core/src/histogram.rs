use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orientation histogram over `[0, pi)` with `n_b` equal half-open bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionHistogram {
    bins: Vec<f64>,
}

impl DirectionHistogram {
    pub fn zeros(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::invalid("bin count must be at least 1"));
        }
        Ok(Self {
            bins: vec![0.0; n_bins],
        })
    }

    pub fn from_bins(bins: Vec<f64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::invalid("bin count must be at least 1"));
        }
        if bins.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::invalid("bins must be finite and non-negative"));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_width(&self) -> f64 {
        PI / self.bins.len() as f64
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.bins.iter().all(|&b| b == 0.0)
    }

    /// Adds `mass` to the bin containing `theta`.
    pub fn deposit(&mut self, theta: f64, mass: f64) {
        let k = bin_index(theta, self.bins.len());
        self.bins[k] += mass;
    }

    pub(crate) fn add_to_bin(&mut self, k: usize, mass: f64) {
        self.bins[k] += mass;
    }

    /// Index of the largest bin, lowest index on ties. `None` for an all-zero
    /// histogram.
    pub fn argmax(&self) -> Option<usize> {
        if self.is_zero() {
            return None;
        }
        let mut best = 0;
        for (k, &b) in self.bins.iter().enumerate() {
            if b > self.bins[best] {
                best = k;
            }
        }
        Some(best)
    }

    /// Bin-wise sum of several histograms with the same bin count.
    pub fn pooled<'a>(hists: impl IntoIterator<Item = &'a DirectionHistogram>) -> Result<Self> {
        let mut iter = hists.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::invalid("cannot pool an empty histogram list"))?;
        let mut out = first.clone();
        for h in iter {
            if h.n_bins() != out.n_bins() {
                return Err(Error::invalid("pooled histograms must share a bin count"));
            }
            for (o, b) in out.bins.iter_mut().zip(&h.bins) {
                *o += b;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bins: self.bins.iter().map(|b| b * factor).collect(),
        }
    }
}

/// Bin of angle `theta` (radians, taken mod pi) among `n_bins` half-open bins
/// `[k pi / n_b, (k + 1) pi / n_b)`.
///
/// Angles within 1e-9 of a bin edge (after scaling to bin units) snap to the
/// upper bin, so exact edges such as `pi / 4` land where they belong despite
/// `atan` rounding.
pub fn bin_index(theta: f64, n_bins: usize) -> usize {
    let t = theta.rem_euclid(PI);
    let scaled = t / PI * n_bins as f64;
    let k = (scaled + 1e-9).floor() as usize;
    k % n_bins
}
