//! Grayscale image and square-patch containers.

use crate::error::{Error, Result};

/// Sample depth of the file an image was decoded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleDepth {
    Eight,
    Sixteen,
}

/// Row-major grid of non-negative intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    depth: SampleDepth,
    maxval: u16,
}

impl GrayImage {
    /// Builds an image from row-major pixels. Negative or non-finite pixels
    /// are rejected.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid("pixels must be finite and non-negative"));
        }
        let peak = pixels.iter().fold(0.0_f64, |m, &p| m.max(p));
        let (depth, maxval) = if peak <= 255.0 {
            (SampleDepth::Eight, 255)
        } else {
            (SampleDepth::Sixteen, u16::MAX)
        };
        Ok(Self {
            width,
            height,
            pixels,
            depth,
            maxval,
        })
    }

    /// Like [`GrayImage::new`], clamping negative pixels to zero first.
    pub fn from_clamped(width: usize, height: usize, mut pixels: Vec<f64>) -> Result<Self> {
        for p in &mut pixels {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    /// Attaches file provenance. Used by the decoders.
    pub fn with_depth(mut self, depth: SampleDepth, maxval: u16) -> Self {
        self.depth = depth;
        self.maxval = maxval;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn depth(&self) -> SampleDepth {
        self.depth
    }

    pub fn maxval(&self) -> u16 {
        self.maxval
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Pixel lookup with coordinates clamped to the border.
    #[inline]
    pub fn get_replicate(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c)
    }

    /// Copies the `side x side` square whose top-left corner is `origin`.
    pub fn patch(&self, origin: (usize, usize), side: usize) -> Result<PatchGrid> {
        let (r0, c0) = origin;
        if side == 0 || r0 + side > self.height || c0 + side > self.width {
            return Err(Error::invalid(format!(
                "patch of side {side} at {origin:?} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(side * side);
        for r in r0..r0 + side {
            pixels.extend_from_slice(&self.pixels[r * self.width + c0..r * self.width + c0 + side]);
        }
        Ok(PatchGrid {
            side,
            pixels,
            origin,
        })
    }

    /// Min-max rescale into `[0, 1]`. Constant images map to all zeros.
    pub fn rescaled_unit(&self) -> GrayImage {
        let lo = self.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let pixels = self
            .pixels
            .iter()
            .map(|&p| if span > 0.0 { (p - lo) / span } else { 0.0 })
            .collect();
        GrayImage {
            pixels,
            ..self.clone()
        }
    }
}

/// A square patch cut from an image, flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    side: usize,
    pixels: Vec<f64>,
    origin: (usize, usize),
}

impl PatchGrid {
    /// Builds a patch at origin `(0, 0)`. Negative pixels are clamped to zero,
    /// which is how noisy inputs are turned into densities.
    pub fn new(side: usize, pixels: Vec<f64>) -> Result<Self> {
        Self::with_origin(side, pixels, (0, 0))
    }

    pub fn with_origin(side: usize, mut pixels: Vec<f64>, origin: (usize, usize)) -> Result<Self> {
        if side == 0 || pixels.len() != side * side {
            return Err(Error::invalid(format!(
                "patch of side {side} needs {} pixels, got {}",
                side * side,
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("patch pixels must be finite"));
        }
        for p in &mut pixels {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        Ok(Self {
            side,
            pixels,
            origin,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    pub fn total_mass(&self) -> f64 {
        self.pixels.iter().sum()
    }

    /// The patch rotated by 180 degrees.
    pub fn rotated_half_turn(&self) -> PatchGrid {
        PatchGrid {
            side: self.side,
            pixels: self.pixels.iter().rev().copied().collect(),
            origin: self.origin,
        }
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage::new(self.side, self.side, self.pixels.clone())
            .expect("patch pixels are non-negative")
    }
}

/// Top-left offsets `0, stride, 2 * stride, ...` of windows of `side` that fit
/// inside `len`.
pub fn tile_offsets(len: usize, side: usize, stride: usize) -> Vec<usize> {
    if side > len || stride == 0 {
        return Vec::new();
    }
    (0..=(len - side) / stride).map(|k| k * stride).collect()
}

/// Like [`tile_offsets`], plus a final window flush with the far border when
/// the regular tiling leaves pixels uncovered.
pub fn covering_offsets(len: usize, side: usize, stride: usize) -> Vec<usize> {
    let mut offsets = tile_offsets(len, side, stride);
    if let Some(&last) = offsets.last() {
        if last + side < len {
            offsets.push(len - side);
        }
    }
    offsets
}
