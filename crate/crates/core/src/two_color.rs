//! Nearest two-color patch under the transport distance, and the smoothing,
//! edge and noise maps derived from it.
//!
//! Finding the best mask is a mixed-binary problem. The fitter searches the
//! masks induced by thresholding the patch at each of its distinct values.
//! For a mask with `k` ones, mass conservation `a k + b (L - k) = M` leaves a
//! single free level; the distance is convex in it (the transport cost is
//! convex in the target), so a golden-section search over the feasible range
//! finds the best level for that mask.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{covering_offsets, GrayImage, PatchGrid};
use crate::ot::{build_grid_cost, solve_transport, work_matrix, CostMatrix, DensityVector, MASS_TOLERANCE};

pub const DEFAULT_PATCH_SIDE: usize = 3;
pub const DEFAULT_STRIDE: usize = 2;

/// Relative width at which the level search stops.
const LEVEL_TOLERANCE: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// A two-level patch `a * z + b * (1 - z)` with `a >= b`, tied to the patch it
/// was evaluated against. Only feasible (mass-conserving, non-negative)
/// models can be built.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoColorModel {
    mask: Vec<bool>,
    level_a: f64,
    level_b: f64,
    distance: f64,
}

impl TwoColorModel {
    /// Evaluates the model with mask `mask` and level `a` on the ones; the
    /// other level follows from mass conservation. Fails if that level would
    /// be negative.
    pub fn evaluate(patch: &PatchGrid, cost: &CostMatrix, mask: &[bool], a: f64) -> Result<Self> {
        let len = patch.pixels().len();
        if mask.len() != len || cost.dim() != len {
            return Err(Error::invalid("mask and cost must match the patch size"));
        }
        if !a.is_finite() || a < 0.0 {
            return Err(Error::invalid("levels must be finite and non-negative"));
        }
        let total = patch.total_mass();
        if total <= 0.0 {
            return Err(Error::DegenerateInput("patch has zero mass".into()));
        }
        let k = mask.iter().filter(|&&z| z).count();
        let (a, b) = match k {
            0 => {
                let b = total / len as f64;
                (b, b)
            }
            _ if k == len => {
                let a = total / len as f64;
                (a, a)
            }
            _ => {
                let b = (total - a * k as f64) / (len - k) as f64;
                if b < -MASS_TOLERANCE * total {
                    return Err(Error::invalid(format!(
                        "level a = {a} leaves negative mass for the other color"
                    )));
                }
                (a, b.max(0.0))
            }
        };
        let target: Vec<f64> = mask.iter().map(|&z| if z { a } else { b }).collect();
        let source = DensityVector::new(patch.pixels().to_vec())?;
        let plan = solve_transport(&source, &DensityVector::new(target)?, cost)?;
        let mut model = Self {
            mask: mask.to_vec(),
            level_a: a,
            level_b: b,
            distance: plan.objective(),
        };
        model.canonicalize();
        Ok(model)
    }

    fn canonicalize(&mut self) {
        let k = self.mask.iter().filter(|&&z| z).count();
        if k == 0 || k == self.mask.len() {
            let level = if k == 0 { self.level_b } else { self.level_a };
            self.mask.iter_mut().for_each(|z| *z = true);
            self.level_a = level;
            self.level_b = level;
        } else if self.level_a < self.level_b {
            std::mem::swap(&mut self.level_a, &mut self.level_b);
            self.mask.iter_mut().for_each(|z| *z = !*z);
        }
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn level_a(&self) -> f64 {
        self.level_a
    }

    pub fn level_b(&self) -> f64 {
        self.level_b
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// `|a - b|`, the edge indicator.
    pub fn contrast(&self) -> f64 {
        self.level_a - self.level_b
    }

    /// The two-color patch as a flat row-major vector.
    pub fn target(&self) -> Vec<f64> {
        self.mask
            .iter()
            .map(|&z| if z { self.level_a } else { self.level_b })
            .collect()
    }
}

/// Reusable fitter for one patch side.
#[derive(Debug, Clone)]
pub struct TwoColorFitter {
    side: usize,
    cost: CostMatrix,
}

impl TwoColorFitter {
    pub fn new(side: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid("two-color fitting needs patch side >= 2"));
        }
        Ok(Self {
            side,
            cost: build_grid_cost(side)?,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn fit(&self, patch: &PatchGrid) -> Result<TwoColorModel> {
        if patch.side() != self.side {
            return Err(Error::invalid(format!(
                "patch side {} does not match fitter side {}",
                patch.side(),
                self.side
            )));
        }
        let px = patch.pixels();
        let len = px.len();
        let total = patch.total_mass();
        if total <= 0.0 {
            return Err(Error::DegenerateInput("patch has zero mass".into()));
        }

        let mut levels = px.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();

        if levels.len() <= 2 {
            // The patch is its own nearest two-color patch.
            let (low, high) = (levels[0], *levels.last().expect("patch is non-empty"));
            let mut model = TwoColorModel {
                mask: px.iter().map(|&p| p == high).collect(),
                level_a: high,
                level_b: low,
                distance: 0.0,
            };
            model.canonicalize();
            return Ok(model);
        }

        let mut best = TwoColorModel::evaluate(patch, &self.cost, &vec![true; len], 0.0)?;
        for &threshold in &levels[..levels.len() - 1] {
            let mask: Vec<bool> = px.iter().map(|&p| p > threshold).collect();
            let candidate = self.best_level(patch, &mask)?;
            if candidate.distance < best.distance {
                best = candidate;
            }
        }
        Ok(best)
    }

    /// Best model for a fixed mask: the mean of the masked pixels as a seed,
    /// then golden-section search on `a` over `[0, M / k]`.
    fn best_level(&self, patch: &PatchGrid, mask: &[bool]) -> Result<TwoColorModel> {
        let px = patch.pixels();
        let total = patch.total_mass();
        let k = mask.iter().filter(|&&z| z).count();
        let seed_level = px
            .iter()
            .zip(mask)
            .filter(|(_, &z)| z)
            .map(|(p, _)| p)
            .sum::<f64>()
            / k as f64;
        let eval = |a: f64| TwoColorModel::evaluate(patch, &self.cost, mask, a);

        let mut best = eval(seed_level)?;
        let (mut lo, mut hi) = (0.0, total / k as f64);
        let stop = LEVEL_TOLERANCE * hi;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        while hi - lo > stop {
            if f1.distance <= f2.distance {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        for m in [f1, f2] {
            if m.distance < best.distance {
                best = m;
            }
        }
        Ok(best)
    }
}

/// Fits the nearest two-color patch with the threshold-partition search.
pub fn fit_two_color(patch: &PatchGrid) -> Result<TwoColorModel> {
    TwoColorFitter::new(patch.side())?.fit(patch)
}

/// Which transport the noise scores are read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseReference {
    /// Patch to its fitted two-color patch.
    #[default]
    TwoColor,
    /// Patch to its uniform-mean patch.
    Uniform,
}

/// Per-pixel transport work: outgoing plus incoming off-diagonal work.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseScoreMap {
    pub side: usize,
    pub scores: Vec<f64>,
    /// Total work of the generating plan.
    pub total_work: f64,
}

pub fn noise_scores(patch: &PatchGrid, model: &TwoColorModel) -> Result<NoiseScoreMap> {
    let target = model.target();
    if target.len() != patch.pixels().len() {
        return Err(Error::invalid("model does not match the patch size"));
    }
    noise_scores_against(patch, target)
}

pub fn noise_scores_with(
    patch: &PatchGrid,
    model: &TwoColorModel,
    reference: NoiseReference,
) -> Result<NoiseScoreMap> {
    match reference {
        NoiseReference::TwoColor => noise_scores(patch, model),
        NoiseReference::Uniform => {
            let len = patch.pixels().len();
            noise_scores_against(patch, vec![patch.total_mass() / len as f64; len])
        }
    }
}

fn noise_scores_against(patch: &PatchGrid, target: Vec<f64>) -> Result<NoiseScoreMap> {
    let side = patch.side();
    let len = side * side;
    let cost = build_grid_cost(side)?;
    let source = DensityVector::new(patch.pixels().to_vec())?;
    let plan = solve_transport(&source, &DensityVector::new(target)?, &cost)?;
    let work = work_matrix(&plan, &cost)?;
    let mut scores = vec![0.0; len];
    for i in 0..len {
        for j in 0..len {
            if i != j {
                let w = work.get(i, j);
                scores[i] += w;
                scores[j] += w;
            }
        }
    }
    Ok(NoiseScoreMap {
        side,
        scores,
        total_work: work.total(),
    })
}

/// Fitted model per covering patch; `None` for zero-mass patches.
pub type PatchFit = ((usize, usize), Option<TwoColorModel>);

/// Fits every patch of a covering tiling (the last row/column of patches is
/// pulled flush with the border so every pixel is covered).
pub fn fit_image(image: &GrayImage, side: usize, stride: usize) -> Result<Vec<PatchFit>> {
    if stride == 0 {
        return Err(Error::invalid("stride must be positive"));
    }
    if image.width() < side || image.height() < side {
        return Err(Error::invalid("image is smaller than one patch"));
    }
    let fitter = TwoColorFitter::new(side)?;
    let rows = covering_offsets(image.height(), side, stride);
    let cols = covering_offsets(image.width(), side, stride);
    let origins: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect();
    origins
        .par_iter()
        .map(|&origin| {
            let patch = image.patch(origin, side)?;
            match fitter.fit(&patch) {
                Ok(model) => Ok((origin, Some(model))),
                Err(Error::DegenerateInput(_)) => Ok((origin, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Mean-combines per-patch values over the footprint of each patch.
fn blend(
    image: &GrayImage,
    side: usize,
    fits: &[PatchFit],
    values: impl Fn(&PatchGrid, Option<&TwoColorModel>) -> Vec<f64>,
) -> Result<GrayImage> {
    let w = image.width();
    let mut sum = vec![0.0; w * image.height()];
    let mut count = vec![0u32; w * image.height()];
    for (origin, model) in fits {
        let patch = image.patch(*origin, side)?;
        let vals = values(&patch, model.as_ref());
        for dr in 0..side {
            for dc in 0..side {
                let k = (origin.0 + dr) * w + origin.1 + dc;
                sum[k] += vals[dr * side + dc];
                count[k] += 1;
            }
        }
    }
    let pixels = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| s / c.max(1) as f64)
        .collect();
    GrayImage::from_clamped(image.width(), image.height(), pixels)
        .map(|g| g.with_depth(image.depth(), image.maxval()))
}

/// Replaces each patch by its two-color fit; overlapping patches are averaged.
pub fn smooth_image(image: &GrayImage, side: usize, stride: usize) -> Result<GrayImage> {
    let fits = fit_image(image, side, stride)?;
    blend(image, side, &fits, |patch, model| match model {
        Some(m) => m.target(),
        None => patch.pixels().to_vec(),
    })
}

/// Writes each patch's contrast `|a - b|` over its footprint, averaging
/// overlaps.
pub fn edge_map(image: &GrayImage, side: usize, stride: usize) -> Result<GrayImage> {
    let fits = fit_image(image, side, stride)?;
    blend(image, side, &fits, |patch, model| {
        vec![model.map_or(0.0, TwoColorModel::contrast); patch.pixels().len()]
    })
}

/// Otsu threshold over a 256-bin histogram spanning `[min, max]` of
/// `values`. Returns the upper edge of the last bin of the lower class, so
/// `v > threshold` selects the upper class.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    const BINS: usize = 256;
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi <= lo {
        return hi.max(0.0);
    }
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0usize; BINS];
    for &v in values {
        hist[(((v - lo) / width) as usize).min(BINS - 1)] += 1;
    }
    let total = values.len() as f64;
    let weighted: f64 = hist.iter().enumerate().map(|(k, &h)| k as f64 * h as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best_k, mut best_var) = (0, -1.0);
    for (k, &h) in hist.iter().enumerate().take(BINS - 1) {
        w0 += h as f64;
        sum0 += k as f64 * h as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (weighted - sum0) / w1;
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best_var {
            best_var = between;
            best_k = k;
        }
    }
    lo + (best_k + 1) as f64 * width
}

/// Binary map: 1 where the value exceeds `threshold`, else 0.
pub fn threshold_map(map: &GrayImage, threshold: f64) -> GrayImage {
    let pixels = map
        .pixels()
        .iter()
        .map(|&v| if v > threshold { 1.0 } else { 0.0 })
        .collect();
    GrayImage::new(map.width(), map.height(), pixels).expect("binary pixels are valid")
}

/// Precision and recall of a binary edge map against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScore {
    pub precision: f64,
    pub recall: f64,
}

/// Scores `detected` against `truth` (both: non-zero marks an edge pixel).
/// A detection counts as correct if a truth pixel lies within `tolerance`
/// (Chebyshev distance), and a truth pixel counts as found if a detection
/// lies within `tolerance`; this is matching against the dilated maps. An
/// empty denominator scores 1.
pub fn score_edges(detected: &GrayImage, truth: &GrayImage, tolerance: usize) -> Result<EdgeScore> {
    if detected.width() != truth.width() || detected.height() != truth.height() {
        return Err(Error::invalid("edge maps must have the same dimensions"));
    }
    let det: Vec<bool> = detected.pixels().iter().map(|&v| v > 0.0).collect();
    let tru: Vec<bool> = truth.pixels().iter().map(|&v| v > 0.0).collect();
    let (w, h) = (detected.width(), detected.height());
    let fraction_near = |from: &[bool], to: &[bool]| {
        let near = dilate(to, w, h, tolerance);
        let total = from.iter().filter(|&&x| x).count();
        let hits = from.iter().zip(&near).filter(|(&x, &n)| x && n).count();
        if total == 0 {
            1.0
        } else {
            hits as f64 / total as f64
        }
    };
    Ok(EdgeScore {
        precision: fraction_near(&det, &tru),
        recall: fraction_near(&tru, &det),
    })
}

fn dilate(map: &[bool], w: usize, h: usize, radius: usize) -> Vec<bool> {
    let mut out = vec![false; map.len()];
    for r in 0..h {
        for c in 0..w {
            if map[r * w + c] {
                for rr in r.saturating_sub(radius)..(r + radius + 1).min(h) {
                    for cc in c.saturating_sub(radius)..(c + radius + 1).min(w) {
                        out[rr * w + cc] = true;
                    }
                }
            }
        }
    }
    out
}
