//! Directed communication graphs, stochastic weight assignment, Perron
//! vectors and the weighted norms used by every convergence certificate.
//!
//! Stacked quantities (one vector per agent) are stored as matrices with one
//! row per agent, so that mixing with a weight matrix `W` is the product
//! `W * X`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Default tolerance for the Perron power iterations.
pub const PERRON_TOL: f64 = 1e-12;
/// Iteration cap for the Perron power iterations.
pub const PERRON_CAP: usize = 1_000_000;

/// Directed graph on nodes `0..n`; an edge `(i, j)` means `i` sends to `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Builds a graph, rejecting self-loops and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "graph needs at least one node".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at node {i}")));
            }
            set.insert((i, j));
        }
        Ok(Self { n, edges: set })
    }

    /// Directed ring `0 → 1 → … → n−1 → 0` (no edges for `n = 1`).
    pub fn ring(n: usize) -> Result<Self> {
        let edges: Vec<_> = if n > 1 {
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        } else {
            Vec::new()
        };
        Self::new(n, edges)
    }

    /// Complete directed graph.
    pub fn complete(n: usize) -> Result<Self> {
        Self::new(
            n,
            (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.edges.iter().filter(|&&(_, t)| t == j).count()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.edges.range((i, 0)..(i + 1, 0)).count()
    }

    /// Serialises to the edge-list text format: `n` on the first line, then
    /// one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for (i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Parses the edge-list text format. Blank lines are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (first_no, first) = lines.next().ok_or(Error::EdgeListParse {
            line: 1,
            msg: "missing node count".into(),
        })?;
        let n: usize = first.trim().parse().map_err(|e| Error::EdgeListParse {
            line: first_no + 1,
            msg: format!("bad node count: {e}"),
        })?;
        let mut edges = Vec::new();
        for (no, line) in lines {
            let parse_err = |msg: String| Error::EdgeListParse { line: no + 1, msg };
            let mut it = line.split_whitespace();
            let mut next = |what: &str| -> Result<usize> {
                it.next()
                    .ok_or_else(|| parse_err(format!("missing {what}")))?
                    .parse()
                    .map_err(|e| parse_err(format!("bad {what}: {e}")))
            };
            let i = next("source")?;
            let j = next("target")?;
            if it.next().is_some() {
                return Err(parse_err("trailing tokens".into()));
            }
            edges.push((i, j));
        }
        Self::new(n, edges)
    }

    pub fn read_edge_list(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

/// Ring backbone plus each remaining ordered pair with probability
/// `extra_edge_prob`; deterministic for a fixed seed.
pub fn generate_strongly_connected(
    n: usize,
    extra_edge_prob: f64,
    seed: u64,
) -> Result<DirectedGraph> {
    if !(0.0..=1.0).contains(&extra_edge_prob) {
        return Err(Error::InvalidParameter(format!(
            "edge probability {extra_edge_prob} outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let on_ring = j == (i + 1) % n;
            // draw for every pair so the stream does not depend on the ring
            let draw = rng.random_bool(extra_edge_prob);
            if on_ring || draw {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::new(n, edges)
}

fn reach_all(g: &DirectedGraph, reverse: bool) -> bool {
    let n = g.n();
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in g.edges() {
        if reverse {
            adj[j].push(i);
        } else {
            adj[i].push(j);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// True iff every node reaches every other by a directed path.
pub fn is_strongly_connected(g: &DirectedGraph) -> bool {
    reach_all(g, false) && reach_all(g, true)
}

/// Which stochasticity the assigned weights carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightMode {
    /// `a_ij = 1/(1+indeg(i))` over in-neighbours of `i` and `i` itself.
    Row,
    /// `b_ij = 1/(1+outdeg(j))` over out-neighbours of `j` and `j` itself.
    Column,
}

/// Uniform weight rule over each node's closed neighbourhood.
pub fn assign_weights(g: &DirectedGraph, mode: WeightMode) -> DMatrix<f64> {
    let n = g.n();
    let mut w = DMatrix::zeros(n, n);
    match mode {
        WeightMode::Row => {
            for i in 0..n {
                let share = 1.0 / (1 + g.in_degree(i)) as f64;
                w[(i, i)] = share;
                for &(src, dst) in g.edges() {
                    if dst == i {
                        w[(i, src)] = share;
                    }
                }
            }
        }
        WeightMode::Column => {
            for j in 0..n {
                let share = 1.0 / (1 + g.out_degree(j)) as f64;
                w[(j, j)] = share;
                for &(src, dst) in g.edges() {
                    if src == j {
                        w[(dst, j)] = share;
                    }
                }
            }
        }
    }
    w
}

/// Left Perron vector of a row-stochastic matrix: `πᵀA = πᵀ`, `Σπ = 1`.
pub fn perron_left(a: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    perron_iterate(&a.transpose(), tol)
}

/// Right Perron vector of a column-stochastic matrix: `Bν = ν`, `Σν = 1`.
pub fn perron_right(b: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    perron_iterate(b, tol)
}

fn perron_iterate(m: &DMatrix<f64>, tol: f64) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..PERRON_CAP {
        let next = m * &v;
        let sum = next.sum();
        let next = next / sum;
        let moved = (&next - &v).amax();
        v = next;
        if moved <= tol {
            // confirm the fixed-vector residual on the normalised iterate
            if (m * &v - &v).amax() <= tol {
                return Ok(v);
            }
        }
    }
    Err(Error::PerronStalled(PERRON_CAP))
}

/// Which weighted norm to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    /// `sqrt(Σ w_i ‖z_i‖²)`
    Pi,
    /// `sqrt(Σ ‖z_i‖² / w_i)`
    Nu,
}

fn check_weights(w: &DVector<f64>) -> Result<()> {
    match w.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        Some((index, &value)) => Err(Error::NonPositiveWeight { index, value }),
        None => Ok(()),
    }
}

/// Weighted norm of a stack `z` (one row per agent).
pub fn stacked_weighted_norm(z: &DMatrix<f64>, w: &DVector<f64>, kind: NormKind) -> Result<f64> {
    check_weights(w)?;
    if z.nrows() != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks vs {} weights",
            z.nrows(),
            w.len()
        )));
    }
    Ok(weighted_norm_unchecked(z, w, kind))
}

pub(crate) fn weighted_norm_unchecked(z: &DMatrix<f64>, w: &DVector<f64>, kind: NormKind) -> f64 {
    let mut acc = 0.0;
    for (i, row) in z.row_iter().enumerate() {
        let sq = row.norm_squared();
        acc += match kind {
            NormKind::Pi => w[i] * sq,
            NormKind::Nu => sq / w[i],
        };
    }
    acc.sqrt()
}

/// Operator norm of `m` induced by the weighted vector norm, computed as the
/// spectral norm of the diagonally similar matrix.
pub fn induced_matrix_norm(m: &DMatrix<f64>, w: &DVector<f64>, kind: NormKind) -> Result<f64> {
    check_weights(w)?;
    let n = w.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}×{} matrix vs {} weights",
            m.nrows(),
            m.ncols(),
            n
        )));
    }
    let s = w.map(f64::sqrt);
    let g = match kind {
        NormKind::Pi => DMatrix::from_fn(n, n, |i, j| s[i] * m[(i, j)] / s[j]),
        NormKind::Nu => DMatrix::from_fn(n, n, |i, j| m[(i, j)] * s[j] / s[i]),
    };
    linalg::spectral_norm(&g)
}

/// Norm-equivalence constants `c1‖·‖ ≤ ‖·‖_π ≤ c2‖·‖` and
/// `c3‖·‖_ν ≤ ‖·‖_π ≤ c4‖·‖_ν`, tight for diagonal weightings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

pub fn norm_equivalence_constants(pi: &DVector<f64>, nu: &DVector<f64>) -> NormConstants {
    let prod = pi.component_mul(nu);
    NormConstants {
        c1: pi.min().sqrt(),
        c2: pi.max().sqrt(),
        c3: prod.min().sqrt(),
        c4: prod.max().sqrt(),
    }
}

/// A strongly connected graph with its weight matrices and the derived
/// geometry: Perron vectors, limit matrices, contraction factors and norm
/// constants. Immutable once built.
#[derive(Debug, Clone)]
pub struct Network {
    graph: DirectedGraph,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    pi: DVector<f64>,
    nu: DVector<f64>,
    a_inf: DMatrix<f64>,
    b_inf: DMatrix<f64>,
    rho1: f64,
    rho2: f64,
    consts: NormConstants,
}

impl Network {
    /// Builds the network with the uniform weight rule.
    pub fn new(graph: DirectedGraph) -> Result<Self> {
        let a = assign_weights(&graph, WeightMode::Row);
        let b = assign_weights(&graph, WeightMode::Column);
        Self::with_weights(graph, a, b)
    }

    /// Builds the network from caller-supplied weights, which must be
    /// row-/column-stochastic, have a positive diagonal and match the graph's
    /// sparsity pattern.
    pub fn with_weights(graph: DirectedGraph, a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = graph.n();
        if !is_strongly_connected(&graph) {
            return Err(Error::NotStronglyConnected);
        }
        for (name, m) in [("A", &a), ("B", &b)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}×{}, graph has {n} nodes",
                    m.nrows(),
                    m.ncols()
                )));
            }
            for i in 0..n {
                for j in 0..n {
                    let v = m[(i, j)];
                    let allowed = i == j || graph.has_edge(j, i);
                    if v < 0.0 || (v > 0.0) != allowed {
                        return Err(Error::InvalidParameter(format!(
                            "{name}[{i},{j}] = {v} inconsistent with the graph"
                        )));
                    }
                }
            }
        }
        for i in 0..n {
            let rs = a.row(i).sum();
            let cs = b.column(i).sum();
            if (rs - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} of A sums to {rs}"
                )));
            }
            if (cs - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "column {i} of B sums to {cs}"
                )));
            }
        }
        let pi = perron_left(&a, PERRON_TOL)?;
        let nu = perron_right(&b, PERRON_TOL)?;
        let ones = DVector::from_element(n, 1.0);
        let a_inf = &ones * pi.transpose();
        let b_inf = &nu * ones.transpose();
        let rho1 = induced_matrix_norm(&(&a - &a_inf), &pi, NormKind::Pi)?;
        let rho2 = induced_matrix_norm(&(&b - &b_inf), &nu, NormKind::Nu)?;
        let consts = norm_equivalence_constants(&pi, &nu);
        Ok(Self {
            graph,
            a,
            b,
            pi,
            nu,
            a_inf,
            b_inf,
            rho1,
            rho2,
            consts,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }
    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }
    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }
    pub fn a_inf(&self) -> &DMatrix<f64> {
        &self.a_inf
    }
    pub fn b_inf(&self) -> &DMatrix<f64> {
        &self.b_inf
    }
    pub fn rho1(&self) -> f64 {
        self.rho1
    }
    pub fn rho2(&self) -> f64 {
        self.rho2
    }
    pub fn constants(&self) -> NormConstants {
        self.consts
    }

    /// `πᵀX`: the π-weighted average of the agents' rows.
    pub fn pi_average(&self, x: &DMatrix<f64>) -> DVector<f64> {
        (self.pi.transpose() * x).transpose()
    }

    /// `‖X − A_∞X‖_π`.
    pub fn consensus_error(&self, x: &DMatrix<f64>) -> f64 {
        let avg = self.pi.transpose() * x;
        let mut dev = x.clone();
        for mut row in dev.row_iter_mut() {
            row -= &avg;
        }
        weighted_norm_unchecked(&dev, &self.pi, NormKind::Pi)
    }

    /// `‖Y − B_∞Y‖_ν`.
    pub fn tracking_error(&self, y: &DMatrix<f64>) -> f64 {
        let total = y.row_sum();
        let mut dev = y.clone();
        for (i, mut row) in dev.row_iter_mut().enumerate() {
            row -= &total * self.nu[i];
        }
        weighted_norm_unchecked(&dev, &self.nu, NormKind::Nu)
    }

    /// Spectral norm `‖A − I‖`.
    pub fn norm_a_minus_identity(&self) -> Result<f64> {
        linalg::spectral_norm(&(&self.a - DMatrix::identity(self.n(), self.n())))
    }

    /// Spectral norm of `D_ν⁻¹`, i.e. `max_i 1/ν_i`.
    pub fn norm_dnu_inv(&self) -> f64 {
        1.0 / self.nu.min()
    }
}
