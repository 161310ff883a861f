//! Exact discrete optimal transport between equal-mass densities on a common
//! support.
//!
//! The solver is a transportation simplex over a spanning-tree basis: each
//! basis holds exactly `2L - 1` cells of the `L x L` coupling, dual
//! potentials are read off the tree, and the entering cell is the one with
//! the most negative reduced cost (lowest flat index on ties). Long runs of
//! degenerate pivots switch to Bland's rule until progress resumes, so the
//! pivot sequence is finite and fully deterministic.
//!
//! Memory is `O(L^2)` for the dense cost and coupling; instances up to
//! `L = 1024` are practical.

use crate::error::{Error, Result};

/// Relative tolerance on the source/target mass mismatch.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A non-negative mass vector with its cached total.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    masses: Vec<f64>,
    total_mass: f64,
}

impl DensityVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if let Some(pos) = masses.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::invalid(format!(
                "density entry {pos} is {} (must be finite and non-negative)",
                masses[pos]
            )));
        }
        let total_mass = masses.iter().sum();
        Ok(Self { masses, total_mass })
    }

    /// Every entry set to `value`, which must be finite and non-negative.
    pub fn uniform(len: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; len])
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

/// Square ground-cost matrix. Grid costs built by [`build_grid_cost`] also
/// remember their side length.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    dim: usize,
    side: Option<usize>,
    entries: Vec<f64>,
}

/// Pairwise Euclidean distances between the pixels of a `side x side` grid.
/// Flat index `i` maps to `(i / side, i % side)`.
pub fn build_grid_cost(side: usize) -> Result<CostMatrix> {
    if side == 0 {
        return Err(Error::invalid("grid side must be at least 1"));
    }
    let dim = side * side;
    let mut entries = vec![0.0; dim * dim];
    for i in 0..dim {
        let (ui, vi) = ((i / side) as f64, (i % side) as f64);
        for j in 0..dim {
            let (uj, vj) = ((j / side) as f64, (j % side) as f64);
            entries[i * dim + j] = (ui - uj).hypot(vi - vj);
        }
    }
    Ok(CostMatrix {
        dim,
        side: Some(side),
        entries,
    })
}

impl CostMatrix {
    /// An arbitrary `dim x dim` cost given row-major. Entries must be finite
    /// and non-negative with a zero diagonal.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "cost matrix needs {} entries for dimension {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::invalid("cost entries must be finite and non-negative"));
        }
        if (0..dim).any(|i| entries[i * dim + i] != 0.0) {
            return Err(Error::invalid("cost matrix diagonal must be zero"));
        }
        Ok(Self {
            dim,
            side: None,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> Option<usize> {
        self.side
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// An optimal vertex of the transportation polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    dim: usize,
    coupling: Vec<f64>,
    objective: f64,
    basis_size: usize,
    basis: Vec<(usize, usize)>,
    source_potentials: Vec<f64>,
    target_potentials: Vec<f64>,
    pivots: usize,
}

impl TransportPlan {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `L x L` coupling.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.dim + j]
    }

    /// Total transport cost, summed row-major over all cells.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Number of strictly positive coupling entries.
    pub fn basis_size(&self) -> usize {
        self.basis_size
    }

    /// The `2L - 1` cells of the final spanning-tree basis, including
    /// degenerate zero-flow cells.
    pub fn basis(&self) -> &[(usize, usize)] {
        &self.basis
    }

    /// Dual potentials `(phi, psi)`: `phi[i] + psi[j] <= C(i, j)` everywhere,
    /// with equality on every basis cell.
    pub fn duals(&self) -> (&[f64], &[f64]) {
        (&self.source_potentials, &self.target_potentials)
    }

    pub fn pivots(&self) -> usize {
        self.pivots
    }
}

/// Per-route workloads `w(i, j) = C(i, j) * P(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl WorkMatrix {
    /// Builds a work matrix from raw row-major entries.
    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::invalid("work matrix must be square"));
        }
        if entries.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("work entries must be finite and non-negative"));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major sum. Bit-identical to the objective of the generating plan.
    pub fn total(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, w| acc + w)
    }
}

pub fn work_matrix(plan: &TransportPlan, cost: &CostMatrix) -> Result<WorkMatrix> {
    if plan.dim != cost.dim {
        return Err(Error::invalid(format!(
            "plan dimension {} does not match cost dimension {}",
            plan.dim, cost.dim
        )));
    }
    let entries = cost
        .entries
        .iter()
        .zip(&plan.coupling)
        .map(|(c, p)| c * p)
        .collect();
    Ok(WorkMatrix {
        dim: plan.dim,
        entries,
    })
}

/// Solves the balanced transportation problem between `source` and `target`.
pub fn solve_transport(
    source: &DensityVector,
    target: &DensityVector,
    cost: &CostMatrix,
) -> Result<TransportPlan> {
    let n = cost.dim;
    if source.len() != n || target.len() != n {
        return Err(Error::invalid(format!(
            "source ({}) and target ({}) must both have length {n}; rectangular problems are unsupported",
            source.len(),
            target.len()
        )));
    }
    let (ms, mt) = (source.total_mass, target.total_mass);
    let scale = ms.max(mt);
    if scale <= 0.0 {
        return Err(Error::DegenerateInput("total mass is zero".into()));
    }
    if (ms - mt).abs() > MASS_TOLERANCE * scale {
        return Err(Error::MassImbalance {
            source_mass: ms,
            target_mass: mt,
        });
    }
    TreeSimplex::new(&source.masses, &target.masses, cost).run()
}

/// Consecutive degenerate pivots tolerated before switching to Bland's rule,
/// as a multiple of the node count.
const DEGENERATE_STREAK_FACTOR: usize = 2;

struct TreeSimplex<'a> {
    n: usize,
    cost: &'a [f64],
    supply: &'a [f64],
    demand: &'a [f64],
    basis: Vec<(usize, usize)>,
    // Scratch, reused across pivots. Nodes 0..n are rows, n..2n columns.
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
    parent: Vec<usize>,
    parent_edge: Vec<usize>,
    depth: Vec<usize>,
    order: Vec<usize>,
    potential: Vec<f64>,
    remaining: Vec<f64>,
    flow: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl<'a> TreeSimplex<'a> {
    fn new(supply: &'a [f64], demand: &'a [f64], cost: &'a CostMatrix) -> Self {
        let n = cost.dim;
        let nodes = 2 * n;
        let mut solver = Self {
            n,
            cost: &cost.entries,
            supply,
            demand,
            basis: Vec::with_capacity(nodes - 1),
            offsets: vec![0; nodes + 1],
            adjacency: vec![0; 2 * (nodes - 1)],
            parent: vec![NONE; nodes],
            parent_edge: vec![NONE; nodes],
            depth: vec![0; nodes],
            order: Vec::with_capacity(nodes),
            potential: vec![0.0; nodes],
            remaining: vec![0.0; nodes],
            flow: vec![0.0; nodes - 1],
        };
        solver.initial_basis();
        solver
    }

    /// Keeps `min(s_i, t_i)` on the diagonal, routes the surplus with a
    /// north-west corner pass over surplus rows and deficit columns, then
    /// joins the remaining components through column 0 with zero-flow cells.
    fn initial_basis(&mut self) {
        let n = self.n;
        let surplus: Vec<usize> = (0..n).filter(|&i| self.supply[i] > self.demand[i]).collect();
        let deficit: Vec<usize> = (0..n).filter(|&j| self.demand[j] > self.supply[j]).collect();

        let mut uf = UnionFind::new(2 * n);
        for i in 0..n {
            self.basis.push((i, i));
            uf.union(i, n + i);
        }

        if !surplus.is_empty() && !deficit.is_empty() {
            let (mut a, mut b) = (0, 0);
            let mut left = self.supply[surplus[0]] - self.demand[surplus[0]];
            let mut need = self.demand[deficit[0]] - self.supply[deficit[0]];
            loop {
                let (r, c) = (surplus[a], deficit[b]);
                self.basis.push((r, c));
                uf.union(r, n + c);
                let moved = left.min(need);
                left -= moved;
                need -= moved;
                let last_row = a + 1 == surplus.len();
                let last_col = b + 1 == deficit.len();
                if last_row && last_col {
                    break;
                }
                if !last_row && (last_col || left <= need) {
                    a += 1;
                    let r = surplus[a];
                    left = self.supply[r] - self.demand[r];
                } else {
                    b += 1;
                    let c = deficit[b];
                    need = self.demand[c] - self.supply[c];
                }
            }
        }

        for i in 1..n {
            if uf.find(i) != uf.find(n) {
                self.basis.push((i, 0));
                uf.union(i, n);
            }
        }
        debug_assert_eq!(self.basis.len(), 2 * n - 1);
    }

    /// Rebuilds the rooted tree, dual potentials and basic flows from the
    /// current basis.
    fn refresh(&mut self) {
        let n = self.n;
        let nodes = 2 * n;

        self.offsets.iter_mut().for_each(|o| *o = 0);
        for &(r, c) in &self.basis {
            self.offsets[r + 1] += 1;
            self.offsets[n + c + 1] += 1;
        }
        for k in 0..nodes {
            self.offsets[k + 1] += self.offsets[k];
        }
        let mut fill = self.offsets.clone();
        for (e, &(r, c)) in self.basis.iter().enumerate() {
            self.adjacency[fill[r]] = e;
            fill[r] += 1;
            self.adjacency[fill[n + c]] = e;
            fill[n + c] += 1;
        }

        self.order.clear();
        self.parent.iter_mut().for_each(|p| *p = NONE);
        self.parent[0] = 0;
        self.parent_edge[0] = NONE;
        self.depth[0] = 0;
        self.potential[0] = 0.0;
        self.order.push(0);
        let mut head = 0;
        while head < self.order.len() {
            let x = self.order[head];
            head += 1;
            for k in self.offsets[x]..self.offsets[x + 1] {
                let e = self.adjacency[k];
                let (r, c) = self.basis[e];
                let y = if x == r { n + c } else { r };
                if self.parent[y] != NONE {
                    continue;
                }
                self.parent[y] = x;
                self.parent_edge[y] = e;
                self.depth[y] = self.depth[x] + 1;
                self.potential[y] = self.cost[r * n + c] - self.potential[x];
                self.order.push(y);
            }
        }
        debug_assert_eq!(self.order.len(), nodes, "basis is not a spanning tree");

        for x in 0..n {
            self.remaining[x] = self.supply[x];
            self.remaining[n + x] = self.demand[x];
        }
        for k in (1..nodes).rev() {
            let x = self.order[k];
            let f = self.remaining[x];
            self.flow[self.parent_edge[x]] = f;
            self.remaining[self.parent[x]] -= f;
        }
    }

    fn entering(&self, tol: f64, bland: bool) -> Option<(usize, usize)> {
        let n = self.n;
        let (u, v) = self.potential.split_at(n);
        let mut best = -tol;
        let mut found = None;
        for (r, (row, &ur)) in self.cost.chunks_exact(n).zip(u).enumerate() {
            for (c, (&cost, &vc)) in row.iter().zip(v).enumerate() {
                let reduced = cost - ur - vc;
                if reduced < best {
                    if bland {
                        return Some((r, c));
                    }
                    best = reduced;
                    found = Some((r, c));
                }
            }
        }
        found
    }

    fn run(mut self) -> Result<TransportPlan> {
        let n = self.n;
        let max_cost = self.cost.iter().fold(0.0_f64, |m, &c| m.max(c));
        let tol = 1e-10 * max_cost.max(1.0);
        let total = self.supply.iter().sum::<f64>().max(self.demand.iter().sum());
        let degenerate_eps = 1e-14 * total;
        let streak_limit = DEGENERATE_STREAK_FACTOR * 2 * n;
        let max_pivots = 50 * n * n + 10_000;

        let mut pivots = 0;
        let mut streak = 0;
        let mut path_row = Vec::new();
        let mut path_col = Vec::new();
        loop {
            self.refresh();
            let Some((r, c)) = self.entering(tol, streak > streak_limit) else {
                break;
            };
            if pivots == max_pivots {
                return Err(Error::SolverStalled(pivots));
            }
            pivots += 1;

            // Tree path from column node n + c up to row node r.
            path_row.clear();
            path_col.clear();
            let (mut a, mut b) = (r, n + c);
            while a != b {
                if self.depth[a] >= self.depth[b] {
                    path_row.push(self.parent_edge[a]);
                    a = self.parent[a];
                } else {
                    path_col.push(self.parent_edge[b]);
                    b = self.parent[b];
                }
            }
            // Edges at even positions along (column -> row) lose flow.
            let mut leaving = NONE;
            let mut leaving_flow = f64::INFINITY;
            let mut leaving_key = usize::MAX;
            for (pos, &e) in path_col.iter().chain(path_row.iter().rev()).enumerate() {
                if pos % 2 != 0 {
                    continue;
                }
                let f = self.flow[e];
                let (er, ec) = self.basis[e];
                let key = er * n + ec;
                if f < leaving_flow || (f == leaving_flow && key < leaving_key) {
                    leaving = e;
                    leaving_flow = f;
                    leaving_key = key;
                }
            }
            self.basis[leaving] = (r, c);
            if leaving_flow.max(0.0) <= degenerate_eps {
                streak += 1;
            } else {
                streak = 0;
            }
        }

        let mut coupling = vec![0.0; n * n];
        for (e, &(r, c)) in self.basis.iter().enumerate() {
            coupling[r * n + c] = self.flow[e].max(0.0);
        }
        let objective = self
            .cost
            .iter()
            .zip(&coupling)
            .fold(0.0, |acc, (c, p)| acc + c * p);
        let basis_size = coupling.iter().filter(|&&p| p > 0.0).count();
        let target_potentials = self.potential[n..].to_vec();
        self.potential.truncate(n);
        Ok(TransportPlan {
            dim: n,
            coupling,
            objective,
            basis_size,
            basis: self.basis,
            source_potentials: self.potential,
            target_potentials,
            pivots,
        })
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
