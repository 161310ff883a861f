//! Conventional histogram of oriented gradients, used as the baseline.
//!
//! Derivatives use the central-difference kernels `[1 0 -1]` and its
//! transpose (correlation, replicate padding at the border). Orientation is
//! `atan(gy / gx)` folded into `[0, pi)`, measured from the column axis.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::histogram::{bin_index, DirectionHistogram};
use crate::image::{tile_offsets, GrayImage};
use crate::whog::PatchHistogram;

/// Stabilizer added to block norms.
pub const BLOCK_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    gx: Vec<f64>,
    gy: Vec<f64>,
    magnitude: Vec<f64>,
    orientation: Vec<Option<f64>>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn gx(&self) -> &[f64] {
        &self.gx
    }

    pub fn gy(&self) -> &[f64] {
        &self.gy
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    /// Per-pixel orientation; `None` where both derivatives vanish.
    pub fn orientation(&self) -> &[Option<f64>] {
        &self.orientation
    }

    /// Histogram of the rectangular region `rows x cols` starting at `origin`.
    pub fn region_histogram(
        &self,
        origin: (usize, usize),
        rows: usize,
        cols: usize,
        n_bins: usize,
    ) -> Result<DirectionHistogram> {
        let (r0, c0) = origin;
        if r0 + rows > self.height || c0 + cols > self.width {
            return Err(Error::invalid("histogram region exceeds gradient field"));
        }
        let mut hist = DirectionHistogram::zeros(n_bins)?;
        for r in r0..r0 + rows {
            for c in c0..c0 + cols {
                let k = r * self.width + c;
                if let Some(theta) = self.orientation[k] {
                    hist.add_to_bin(bin_index(theta, n_bins), self.magnitude[k]);
                }
            }
        }
        Ok(hist)
    }
}

fn orientation(gx: f64, gy: f64) -> Option<f64> {
    if gx == 0.0 {
        return if gy == 0.0 { None } else { Some(FRAC_PI_2) };
    }
    let theta = (gy / gx).atan();
    Some(if theta < 0.0 { theta + PI } else { theta })
}

pub fn gradients(image: &GrayImage) -> Result<GradientField> {
    let (w, h) = (image.width(), image.height());
    if w < 3 || h < 3 {
        return Err(Error::invalid("gradient computation needs an image of at least 3x3"));
    }
    let n = w * h;
    let (mut gx, mut gy) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for r in 0..h as isize {
        for c in 0..w as isize {
            gx.push(image.get_replicate(r, c - 1) - image.get_replicate(r, c + 1));
            gy.push(image.get_replicate(r - 1, c) - image.get_replicate(r + 1, c));
        }
    }
    let magnitude = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();
    let orientation = gx.iter().zip(&gy).map(|(&x, &y)| orientation(x, y)).collect();
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
        orientation,
    })
}

/// Magnitude-weighted orientation histogram over the whole field.
pub fn hog_patch(field: &GradientField, n_bins: usize) -> Result<DirectionHistogram> {
    field.region_histogram((0, 0), field.height, field.width, n_bins)
}

/// Raw HOG histograms for tiled patches. Gradients are taken over the whole
/// image so interior patch borders see their true neighbours.
pub fn hog_image(
    image: &GrayImage,
    side: usize,
    stride: usize,
    n_bins: usize,
) -> Result<HogGrid> {
    let origins = crate::whog::patch_origins(image, side, stride)?;
    let field = gradients(image)?;
    let rows = tile_offsets(image.height(), side, stride).len();
    let cols = tile_offsets(image.width(), side, stride).len();
    let cells = origins
        .into_iter()
        .map(|origin| {
            Ok(PatchHistogram {
                origin,
                histogram: field.region_histogram(origin, side, side, n_bins)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HogGrid { rows, cols, cells })
}

/// Patch histograms laid out on their tiling grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HogGrid {
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<PatchHistogram>,
}

/// One normalized 2x2 block: the four member histograms concatenated
/// row-major and divided by their joint L2 norm plus [`BLOCK_EPSILON`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedBlock {
    pub block: (usize, usize),
    pub values: Vec<f64>,
}

/// Overlapping stride-1 2x2 block normalization over a `rows x cols` grid of
/// histograms given row-major. Blocks are returned in row-major block order.
pub fn block_normalize(
    histograms: &[DirectionHistogram],
    rows: usize,
    cols: usize,
) -> Result<Vec<NormalizedBlock>> {
    if histograms.len() != rows * cols {
        return Err(Error::invalid("histogram count does not match grid shape"));
    }
    if rows < 2 || cols < 2 {
        return Err(Error::invalid("block normalization needs at least one full 2x2 block"));
    }
    let n_bins = histograms[0].n_bins();
    if histograms.iter().any(|h| h.n_bins() != n_bins) {
        return Err(Error::invalid("histograms must share a bin count"));
    }
    let mut blocks = Vec::with_capacity((rows - 1) * (cols - 1));
    for br in 0..rows - 1 {
        for bc in 0..cols - 1 {
            let mut values = Vec::with_capacity(4 * n_bins);
            for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                values.extend_from_slice(histograms[(br + dr) * cols + bc + dc].bins());
            }
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt() + BLOCK_EPSILON;
            values.iter_mut().for_each(|v| *v /= norm);
            blocks.push(NormalizedBlock {
                block: (br, bc),
                values,
            });
        }
    }
    Ok(blocks)
}
