//! Directional texture analysis of grayscale images with optimal transport.
//!
//! Each square patch is treated as a mass distribution and moved onto a
//! uniform distribution of the same total mass under the grid distance. The
//! optimal plan's mass, bucketed by the direction of each route, gives a
//! transport-based histogram of orientations ([`whog`]). A gradient-based
//! histogram ([`hog`]) is provided for comparison. The same transport
//! machinery fits two-level patch models for denoising and edge detection
//! ([`two_color`]), and pooled histograms feed a directionality entropy used
//! to split and compare survival cohorts ([`analysis`]).
//!
//! ```
//! use wlia::image::PatchGrid;
//! use wlia::whog::whog_patch;
//!
//! // Left half dark, right half bright: mass flows along rows.
//! let px: Vec<f64> = (0..64).map(|i| if i % 8 < 4 { 0.25 } else { 0.75 }).collect();
//! let patch = PatchGrid::new(8, px).unwrap();
//! let hist = whog_patch(&patch, 9).unwrap();
//! assert_eq!(hist.argmax(), Some(4));
//! ```

pub mod analysis;
pub mod bench;
pub mod cli;
pub mod error;
pub mod histogram;
pub mod hog;
pub mod image;
pub mod io;
pub mod ot;
pub mod plot;
pub mod synth;
pub mod two_color;
pub mod whog;

pub use error::{Error, Result};
pub use histogram::DirectionHistogram;
pub use image::{GrayImage, PatchGrid};
pub use ot::{build_grid_cost, solve_transport, CostMatrix, DensityVector, TransportPlan};
