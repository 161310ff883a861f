//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use wlia::{build_grid_cost, solve_transport, CostMatrix, DensityVector, PatchGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

/// Random non-negative vector of length `len`, rescaled to sum to `total`.
/// Some entries are zeroed to exercise degenerate bases.
pub fn random_density(rng: &mut impl Rng, len: usize, total: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..1.0) })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x *= total / s);
    v
}

pub fn random_patch(rng: &mut impl Rng, side: usize) -> PatchGrid {
    PatchGrid::new(side, (0..side * side).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Dense two-phase tableau simplex with Bland's rule for
/// `min sum c_ij x_ij` subject to row sums `a`, column sums `b`, `x >= 0`.
/// The last column constraint is redundant and dropped.
pub fn lp_oracle(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let nx = m * n;
    let rows = m + n - 1;
    let cols = nx + rows; // structural then artificial
    let width = cols + 1; // rhs last
    let mut t = vec![0.0; rows * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + i * n + j] = 1.0;
            if j < n - 1 {
                t[(m + j) * width + i * n + j] = 1.0;
            }
        }
    }
    for (r, &rhs) in a.iter().chain(&b[..n - 1]).enumerate() {
        t[r * width + nx + r] = 1.0;
        t[r * width + cols] = rhs;
    }
    let mut basis: Vec<usize> = (nx..nx + rows).collect();

    let phase1: Vec<f64> = (0..cols).map(|k| if k >= nx { 1.0 } else { 0.0 }).collect();
    run_simplex(&mut t, &mut basis, rows, width, &phase1, cols);

    // Drive zero-level artificials out of the basis where possible.
    for r in 0..rows {
        if basis[r] >= nx {
            if let Some(k) = (0..nx).find(|&k| t[r * width + k].abs() > 1e-9) {
                pivot(&mut t, &mut basis, rows, width, r, k);
            }
        }
    }
    let phase2: Vec<f64> = (0..cols).map(|k| if k < nx { cost[k] } else { 0.0 }).collect();
    run_simplex(&mut t, &mut basis, rows, width, &phase2, nx);
    (0..rows)
        .filter(|&r| basis[r] < nx)
        .map(|r| cost[basis[r]] * t[r * width + cols])
        .sum()
}

fn pivot(t: &mut [f64], basis: &mut [usize], rows: usize, width: usize, pr: usize, pc: usize) {
    let p = t[pr * width + pc];
    for k in 0..width {
        t[pr * width + k] /= p;
    }
    for r in 0..rows {
        if r != pr {
            let f = t[r * width + pc];
            if f != 0.0 {
                for k in 0..width {
                    t[r * width + k] -= f * t[pr * width + k];
                }
            }
        }
    }
    basis[pr] = pc;
}

/// Minimizes `obj` with entering candidates restricted to columns `< allowed`.
fn run_simplex(t: &mut [f64], basis: &mut [usize], rows: usize, width: usize, obj: &[f64], allowed: usize) {
    let rhs = width - 1;
    loop {
        let reduced = |k: usize, t: &[f64]| obj[k] - (0..rows).map(|r| obj[basis[r]] * t[r * width + k]).sum::<f64>();
        let Some(enter) = (0..allowed).find(|&k| !basis.contains(&k) && reduced(k, t) < -1e-11) else {
            return;
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..rows {
            let coef = t[r * width + enter];
            if coef > 1e-12 {
                let ratio = t[r * width + rhs] / coef;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - 1e-12 || (ratio <= lratio + 1e-12 && basis[r] < basis[lr]) {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
        }
        let (lr, _) = leave.expect("transport LP is bounded");
        pivot(t, basis, rows, width, lr, enter);
    }
}

/// Transport distance of `px` to the two-level patch `(mask, a)`, with the
/// other level from mass conservation; `None` if that level is negative.
fn two_level_distance(px: &[f64], mask: &[bool], a: f64, cost: &CostMatrix) -> Option<f64> {
    let total: f64 = px.iter().sum();
    let k = mask.iter().filter(|&&z| z).count();
    let len = px.len();
    let (a, b) = if k == len {
        (total / len as f64, 0.0)
    } else {
        let b = (total - a * k as f64) / (len - k) as f64;
        if b < -1e-12 * total {
            return None;
        }
        (a, b.max(0.0))
    };
    let target: Vec<f64> = mask.iter().map(|&z| if z { a } else { b }).collect();
    let plan = solve_transport(
        &DensityVector::new(px.to_vec()).unwrap(),
        &DensityVector::new(target).unwrap(),
        cost,
    )
    .unwrap();
    Some(plan.objective())
}

/// Exhaustive minimum over every binary mask of a `side x side` patch, with
/// the level on the ones optimized by ternary search (the distance is convex
/// in it). A mask and its complement span the same two-level patches, so
/// only masks leaving the last pixel at zero are visited.
pub fn exhaustive_two_color(patch: &PatchGrid) -> f64 {
    let px = patch.pixels();
    let len = px.len();
    assert!(len <= 16, "exhaustive search is for tiny patches");
    let cost = build_grid_cost(patch.side()).unwrap();
    let total: f64 = px.iter().sum();
    (0u32..1 << (len - 1))
        .into_par_iter()
        .map(|bits| {
            let mask: Vec<bool> = (0..len).map(|i| bits >> i & 1 == 1).collect();
            let k = mask.iter().filter(|&&z| z).count();
            if k == 0 || k == len {
                return two_level_distance(px, &vec![true; len], 0.0, &cost).unwrap();
            }
            let f = |a: f64| two_level_distance(px, &mask, a, &cost).unwrap_or(f64::INFINITY);
            let (mut lo, mut hi) = (0.0, total / k as f64);
            for _ in 0..64 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if f(m1) <= f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            f(0.5 * (lo + hi)).min(f(lo)).min(f(hi))
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Step patch with `side / 2` dark columns (0.25) and bright rest (0.75),
/// plus Gaussian noise clamped at zero.
pub fn noisy_step_patch(rng: &mut impl Rng, side: usize, sigma: f64) -> PatchGrid {
    let normal = rand_distr::Normal::new(0.0, sigma).unwrap();
    let px = (0..side * side)
        .map(|i| {
            let base = if i % side < side / 2 { 0.25 } else { 0.75 };
            (base + rand_distr::Distribution::sample(&normal, rng)).max(0.0)
        })
        .collect();
    PatchGrid::new(side, px).unwrap()
}
