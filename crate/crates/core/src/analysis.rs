//! Directionality entropy of regions of interest, median-split grouping and
//! the two-group log-rank test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::histogram::DirectionHistogram;
use crate::image::{GrayImage, PatchGrid};
use crate::whog::Whog;

/// Draws `count` patches uniformly, with replacement, from the positions
/// whose whole `side x side` footprint lies inside the mask (non-zero
/// pixels). Deterministic for a given seed.
pub fn sample_patches(
    image: &GrayImage,
    roi_mask: &GrayImage,
    count: usize,
    side: usize,
    seed: u64,
) -> Result<Vec<PatchGrid>> {
    let origins = valid_origins(image, roi_mask, side)?;
    if count == 0 {
        return Err(Error::invalid("patch count must be at least 1"));
    }
    if origins.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(0..origins.len() as u64) as usize;
            image.patch(origins[k], side)
        })
        .collect()
}

/// Row-major list of patch origins fully inside the mask.
pub fn valid_origins(
    image: &GrayImage,
    roi_mask: &GrayImage,
    side: usize,
) -> Result<Vec<(usize, usize)>> {
    if image.width() != roi_mask.width() || image.height() != roi_mask.height() {
        return Err(Error::invalid("mask and image dimensions differ"));
    }
    if side == 0 {
        return Err(Error::invalid("patch side must be positive"));
    }
    let (w, h) = (image.width(), image.height());
    if w < side || h < side {
        return Ok(Vec::new());
    }
    // Summed-area table of mask membership.
    let mut sat = vec![0usize; (w + 1) * (h + 1)];
    for r in 0..h {
        for c in 0..w {
            let inside = usize::from(roi_mask.get(r, c) > 0.0);
            sat[(r + 1) * (w + 1) + c + 1] =
                inside + sat[r * (w + 1) + c + 1] + sat[(r + 1) * (w + 1) + c] - sat[r * (w + 1) + c];
        }
    }
    let full = side * side;
    let mut origins = Vec::new();
    for r in 0..=h - side {
        for c in 0..=w - side {
            let (r1, c1) = (r + side, c + side);
            let covered = sat[r1 * (w + 1) + c1] + sat[r * (w + 1) + c]
                - sat[r * (w + 1) + c1]
                - sat[r1 * (w + 1) + c];
            if covered == full {
                origins.push((r, c));
            }
        }
    }
    Ok(origins)
}

/// Shannon entropy in bits of the pooled, normalized histogram.
pub fn directionality_entropy(histograms: &[DirectionHistogram]) -> Result<f64> {
    let pooled = DirectionHistogram::pooled(histograms)?;
    histogram_entropy(&pooled)
}

/// Shannon entropy in bits of one histogram after normalization.
pub fn histogram_entropy(hist: &DirectionHistogram) -> Result<f64> {
    let total = hist.total();
    if total <= 0.0 {
        return Err(Error::UndefinedEntropy);
    }
    let h = hist
        .bins()
        .iter()
        .filter(|&&b| b > 0.0)
        .map(|&b| {
            let p = b / total;
            -p * p.log2()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiSample {
    pub sample_id: String,
    pub histograms: Vec<DirectionHistogram>,
    pub entropy: f64,
}

impl RoiSample {
    pub fn new(sample_id: impl Into<String>, histograms: Vec<DirectionHistogram>) -> Result<Self> {
        let entropy = directionality_entropy(&histograms)?;
        Ok(Self {
            sample_id: sample_id.into(),
            histograms,
            entropy,
        })
    }
}

/// Samples `count` patches from the region of interest and scores them with
/// WHOG histograms.
pub fn roi_sample(
    sample_id: impl Into<String>,
    image: &GrayImage,
    roi_mask: &GrayImage,
    count: usize,
    whog: &Whog,
    seed: u64,
) -> Result<RoiSample> {
    let patches = sample_patches(image, roi_mask, count, whog.side(), seed)?;
    let histograms = patches
        .iter()
        .map(|p| whog.histogram(p))
        .collect::<Result<Vec<_>>>()?;
    RoiSample::new(sample_id, histograms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyGroup {
    High,
    Low,
}

impl EntropyGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            EntropyGroup::High => "high",
            EntropyGroup::Low => "low",
        }
    }
}

/// Median of the values; mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Splits samples at the median entropy: strictly above goes high, the rest
/// (including ties with the median) goes low. Input order is preserved.
pub fn median_split(samples: &[RoiSample]) -> Result<(Vec<RoiSample>, Vec<RoiSample>)> {
    let entropies: Vec<f64> = samples.iter().map(|s| s.entropy).collect();
    let groups = median_groups(&entropies)?;
    let mut high = Vec::new();
    let mut low = Vec::new();
    for (s, g) in samples.iter().zip(groups) {
        match g {
            EntropyGroup::High => high.push(s.clone()),
            EntropyGroup::Low => low.push(s.clone()),
        }
    }
    Ok((high, low))
}

/// Group label for each value under the median rule of [`median_split`].
pub fn median_groups(values: &[f64]) -> Result<Vec<EntropyGroup>> {
    if values.len() < 2 {
        return Err(Error::invalid("median split needs at least 2 samples"));
    }
    let m = median(values).expect("non-empty");
    Ok(values
        .iter()
        .map(|&v| if v > m { EntropyGroup::High } else { EntropyGroup::Low })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalRecord<G> {
    pub sample_id: String,
    pub time: f64,
    /// `true` when the event was observed, `false` when censored.
    pub event: bool,
    pub group: G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRankResult {
    pub chi_square: f64,
    pub p_value: f64,
}

/// Two-group log-rank test with the hypergeometric variance.
///
/// Group labels can be of any type with equality; exactly two distinct labels
/// must be present. The first label encountered is "group 1" for the
/// observed-minus-expected sum, which does not affect the statistic.
pub fn logrank_test<G: PartialEq + Clone>(records: &[SurvivalRecord<G>]) -> Result<LogRankResult> {
    let mut labels: Vec<G> = Vec::new();
    for r in records {
        if !r.time.is_finite() || r.time <= 0.0 {
            return Err(Error::invalid(format!(
                "survival time for {} must be positive",
                r.sample_id
            )));
        }
        if !labels.contains(&r.group) {
            labels.push(r.group.clone());
        }
    }
    if labels.len() != 2 {
        return Err(Error::invalid(format!(
            "log-rank test needs exactly 2 groups, found {}",
            labels.len()
        )));
    }
    let mut data: Vec<(f64, bool, bool)> = records
        .iter()
        .map(|r| (r.time, r.event, r.group == labels[0]))
        .collect();
    data.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut at_risk = data.len() as f64;
    let mut at_risk_first = data.iter().filter(|d| d.2).count() as f64;
    let (mut observed_minus_expected, mut variance) = (0.0, 0.0);
    let mut i = 0;
    while i < data.len() {
        let t = data[i].0;
        let (mut deaths, mut deaths_first, mut leaving, mut leaving_first) = (0.0, 0.0, 0.0, 0.0);
        while i < data.len() && data[i].0 == t {
            let (_, event, first) = data[i];
            leaving += 1.0;
            if first {
                leaving_first += 1.0;
            }
            if event {
                deaths += 1.0;
                if first {
                    deaths_first += 1.0;
                }
            }
            i += 1;
        }
        if deaths > 0.0 {
            let share = at_risk_first / at_risk;
            observed_minus_expected += deaths_first - deaths * share;
            if at_risk > 1.0 {
                variance += deaths * share * (1.0 - share) * (at_risk - deaths) / (at_risk - 1.0);
            }
        }
        at_risk -= leaving;
        at_risk_first -= leaving_first;
    }

    if variance <= 0.0 {
        return Ok(LogRankResult {
            chi_square: 0.0,
            p_value: 1.0,
        });
    }
    let chi_square = observed_minus_expected * observed_minus_expected / variance;
    Ok(LogRankResult {
        chi_square,
        p_value: chi_square_sf(chi_square),
    })
}

/// Upper tail of the chi-square distribution with one degree of freedom.
pub fn chi_square_sf(x: f64) -> f64 {
    let dist = ChiSquared::new(1.0).expect("one degree of freedom is valid");
    dist.sf(x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(b: &[f64]) -> DirectionHistogram {
        DirectionHistogram::from_bins(b.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let uniform = directionality_entropy(&[hist(&[1.0; 9])]).unwrap();
        assert!((uniform - 9f64.log2()).abs() < 1e-12);
        let point = directionality_entropy(&[hist(&[0.0, 4.0, 0.0])]).unwrap();
        assert_eq!(point, 0.0);
        let mut b = vec![0.0; 9];
        b[0] = 0.5;
        b[1] = 0.25;
        b[2] = 0.25;
        assert_eq!(directionality_entropy(&[hist(&b)]).unwrap(), 1.5);
        assert!(matches!(
            directionality_entropy(&[hist(&[0.0; 9])]),
            Err(Error::UndefinedEntropy)
        ));
    }

    #[test]
    fn entropy_pools_before_normalizing() {
        let e = directionality_entropy(&[hist(&[1.0, 0.0]), hist(&[0.0, 1.0])]).unwrap();
        assert_eq!(e, 1.0);
    }

    fn sample(id: &str, e: f64) -> RoiSample {
        RoiSample {
            sample_id: id.into(),
            histograms: Vec::new(),
            entropy: e,
        }
    }

    #[test]
    fn median_split_examples() {
        let s = [sample("a", 1.0), sample("b", 2.0), sample("c", 3.0)];
        let (high, low) = median_split(&s).unwrap();
        assert_eq!(high.iter().map(|s| s.sample_id.as_str()).collect::<Vec<_>>(), ["c"]);
        assert_eq!(low.iter().map(|s| s.sample_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);

        let s = [sample("a", 1.0), sample("b", 4.0)];
        let (high, low) = median_split(&s).unwrap();
        assert_eq!((high.len(), low.len()), (1, 1));
        assert_eq!(high[0].sample_id, "b");

        let s = [sample("a", 2.0), sample("b", 2.0)];
        let (high, low) = median_split(&s).unwrap();
        assert_eq!((high.len(), low.len()), (0, 2));

        assert!(median_split(&s[..1]).is_err());
    }

    fn rec(time: f64, event: bool, group: u8) -> SurvivalRecord<u8> {
        SurvivalRecord {
            sample_id: format!("{group}-{time}"),
            time,
            event,
            group,
        }
    }

    #[test]
    fn logrank_identical_groups() {
        let mut r = Vec::new();
        for (t, e) in [(1.0, true), (2.0, false), (3.0, true), (5.0, true)] {
            r.push(rec(t, e, 0));
            r.push(rec(t, e, 1));
        }
        let res = logrank_test(&r).unwrap();
        assert_eq!(res.chi_square, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn logrank_errors() {
        assert!(logrank_test(&[rec(1.0, true, 0), rec(2.0, true, 0)]).is_err());
        assert!(logrank_test(&[rec(0.0, true, 0), rec(2.0, true, 1)]).is_err());
    }

    #[test]
    fn single_square_roi() {
        let img = GrayImage::from_fn(10, 10, |r, c| (r * 10 + c) as f64).unwrap();
        let mask = GrayImage::from_fn(10, 10, |r, c| {
            if (2..5).contains(&r) && (4..7).contains(&c) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let patches = sample_patches(&img, &mask, 5, 3, 9).unwrap();
        assert!(patches.iter().all(|p| p.origin() == (2, 4)));
        assert!(matches!(
            sample_patches(&img, &mask, 5, 4, 9),
            Err(Error::EmptyRoi)
        ));
    }
}
