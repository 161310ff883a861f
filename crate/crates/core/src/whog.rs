//! Wasserstein histogram of orientations (WHOG).
//!
//! Each patch is transported to the uniform patch of the same mean. Every
//! off-diagonal route `i -> j` of the optimal plan carries work
//! `C(i, j) * P(i, j)`, and that work is credited to the orientation bin of the
//! displacement between the two pixels. The bins therefore sum to the
//! transport distance itself.
//!
//! Coordinates are `(u, v) = (row, col)` with rows increasing downward. A
//! route's angle is measured from the row axis, so purely horizontal routes
//! sit at `pi / 2` and purely vertical ones at `0`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::histogram::{bin_index, DirectionHistogram};
use crate::image::{tile_offsets, GrayImage, PatchGrid};
use crate::ot::{build_grid_cost, solve_transport, work_matrix, CostMatrix, DensityVector, TransportPlan, WorkMatrix};

pub const DEFAULT_PATCH_SIDE: usize = 8;
pub const DEFAULT_BINS: usize = 9;

/// The uniform density carrying the patch's total mass.
pub fn uniform_mean_target(patch: &PatchGrid) -> Result<DensityVector> {
    let total: f64 = patch.pixels().iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateInput("patch has zero mass".into()));
    }
    let len = patch.pixels().len();
    DensityVector::uniform(len, total / len as f64)
}

/// Angle in `[0, pi)` of the route between flat indices `i` and `j` of a
/// `side x side` grid.
pub fn route_direction(i: usize, j: usize, side: usize) -> Result<f64> {
    let len = side * side;
    if i >= len || j >= len {
        return Err(Error::invalid(format!("route ({i}, {j}) outside a grid of side {side}")));
    }
    if i == j {
        return Err(Error::invalid("stationary mass has no direction"));
    }
    let (u1, v1) = ((i / side) as f64, (i % side) as f64);
    let (u2, v2) = ((j / side) as f64, (j % side) as f64);
    if u1 == u2 {
        return Ok(FRAC_PI_2);
    }
    let theta = ((v1 - v2) / (u1 - u2)).atan();
    Ok(if theta < 0.0 { theta + std::f64::consts::PI } else { theta })
}

/// Bin index for every ordered pair of grid pixels; diagonal entries are unused.
fn route_bin_table(side: usize, n_bins: usize) -> Vec<u32> {
    let len = side * side;
    let mut table = vec![0; len * len];
    for i in 0..len {
        for j in 0..len {
            if i != j {
                let theta = route_direction(i, j, side).expect("indices in range");
                table[i * len + j] = bin_index(theta, n_bins) as u32;
            }
        }
    }
    table
}

/// Sums work entries into orientation bins, visiting `work` row-major.
pub fn bin_work(work: &WorkMatrix, side: usize, n_bins: usize) -> Result<DirectionHistogram> {
    if work.dim() != side * side {
        return Err(Error::invalid(format!(
            "work matrix of dimension {} does not match side {side}",
            work.dim()
        )));
    }
    let table = route_bin_table(side, n_bins);
    let mut hist = DirectionHistogram::zeros(n_bins)?;
    accumulate(&mut hist, work, &table);
    Ok(hist)
}

fn accumulate(hist: &mut DirectionHistogram, work: &WorkMatrix, table: &[u32]) {
    let len = work.dim();
    for (k, &w) in work.entries().iter().enumerate() {
        if k / len != k % len && w != 0.0 {
            hist.add_to_bin(table[k] as usize, w);
        }
    }
}

/// Result of one patch: the histogram and the distance it decomposes.
#[derive(Debug, Clone, PartialEq)]
pub struct WhogPatch {
    pub histogram: DirectionHistogram,
    pub distance: f64,
}

/// Reusable WHOG extractor for one patch size and bin count. Holds the grid
/// cost and the route-to-bin table so repeated patches skip rebuilding them.
#[derive(Debug, Clone)]
pub struct Whog {
    side: usize,
    n_bins: usize,
    cost: CostMatrix,
    table: Vec<u32>,
}

impl Whog {
    pub fn new(side: usize, n_bins: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid("directional analysis needs patch side >= 2"));
        }
        if n_bins == 0 {
            return Err(Error::invalid("bin count must be at least 1"));
        }
        Ok(Self {
            side,
            n_bins,
            cost: build_grid_cost(side)?,
            table: route_bin_table(side, n_bins),
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    /// Optimal plan from the patch to its uniform-mean patch, or `None` when
    /// the patch has zero mass or is constant (nothing moves).
    pub fn transport(&self, patch: &PatchGrid) -> Result<Option<TransportPlan>> {
        self.check_side(patch)?;
        let px = patch.pixels();
        if px.iter().all(|&p| p == px[0]) {
            return Ok(None);
        }
        let source = DensityVector::new(px.to_vec())?;
        let target = uniform_mean_target(patch)?;
        solve_transport(&source, &target, &self.cost).map(Some)
    }

    pub fn analyze(&self, patch: &PatchGrid) -> Result<WhogPatch> {
        let mut histogram = DirectionHistogram::zeros(self.n_bins)?;
        let Some(plan) = self.transport(patch)? else {
            return Ok(WhogPatch {
                histogram,
                distance: 0.0,
            });
        };
        let work = work_matrix(&plan, &self.cost)?;
        accumulate(&mut histogram, &work, &self.table);
        Ok(WhogPatch {
            histogram,
            distance: plan.objective(),
        })
    }

    pub fn histogram(&self, patch: &PatchGrid) -> Result<DirectionHistogram> {
        self.analyze(patch).map(|p| p.histogram)
    }

    fn check_side(&self, patch: &PatchGrid) -> Result<()> {
        if patch.side() != self.side {
            return Err(Error::invalid(format!(
                "patch side {} does not match extractor side {}",
                patch.side(),
                self.side
            )));
        }
        Ok(())
    }
}

/// WHOG histogram of a single patch. Zero-mass and constant patches give the
/// all-zero histogram.
pub fn whog_patch(patch: &PatchGrid, n_bins: usize) -> Result<DirectionHistogram> {
    Whog::new(patch.side(), n_bins)?.histogram(patch)
}

/// Histogram of the patch at `origin` (top-left, `(row, col)`).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchHistogram {
    pub origin: (usize, usize),
    pub histogram: DirectionHistogram,
}

/// Patch origins `(r * stride, c * stride)` fully inside an image, row-major.
pub fn patch_origins(
    image: &GrayImage,
    side: usize,
    stride: usize,
) -> Result<Vec<(usize, usize)>> {
    if stride == 0 || side == 0 {
        return Err(Error::invalid("patch side and stride must be positive"));
    }
    if image.width() < side || image.height() < side {
        return Err(Error::invalid(format!(
            "{}x{} image is smaller than one {side}x{side} patch",
            image.width(),
            image.height()
        )));
    }
    let rows = tile_offsets(image.height(), side, stride);
    let cols = tile_offsets(image.width(), side, stride);
    Ok(rows
        .iter()
        .flat_map(|&r| cols.iter().map(move |&c| (r, c)))
        .collect())
}

/// WHOG histograms of every tiled patch, in row-major origin order.
pub fn whog_image(
    image: &GrayImage,
    side: usize,
    stride: usize,
    n_bins: usize,
) -> Result<Vec<PatchHistogram>> {
    let origins = patch_origins(image, side, stride)?;
    let whog = Whog::new(side, n_bins)?;
    origins
        .par_iter()
        .map(|&origin| {
            let patch = image.patch(origin, side)?;
            Ok(PatchHistogram {
                origin,
                histogram: whog.histogram(&patch)?,
            })
        })
        .collect()
}
