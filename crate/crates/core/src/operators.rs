//! Operators on finite-dimensional real vectors, with optional Lipschitz and
//! distance-to-fixed-set metadata, plus the standard constructions and the
//! sampling checks used to validate operator assumptions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Residual below which a point counts as a fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-9;
/// Multiplier applied to a sampled regularity estimate before it is used in a
/// stepsize bound; the sampled value is a lower bound on the true constant.
pub const KAPPA_SAFETY: f64 = 1.1;

pub type EvalFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DistanceFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// An evaluable map `R^dim_in → R^dim_out`.
///
/// `eval` must be a pure function: handles are cloned freely and called from
/// several threads.
#[derive(Clone)]
pub struct OperatorHandle {
    dim_in: usize,
    dim_out: usize,
    eval: EvalFn,
    lipschitz: Option<f64>,
    fix_distance: Option<DistanceFn>,
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("lipschitz", &self.lipschitz)
            .field("fix_distance", &self.fix_distance.is_some())
            .finish()
    }
}

impl OperatorHandle {
    pub fn new<F>(dim_in: usize, dim_out: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            dim_in,
            dim_out,
            eval: Arc::new(eval),
            lipschitz: None,
            fix_distance: None,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, |x| x.clone())
            .with_lipschitz(1.0)
            .with_fix_distance(|_| 0.0)
    }

    /// `x ↦ Mx + c`, with the exact Lipschitz constant `‖M‖₂`.
    pub fn affine(m: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if m.nrows() != c.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows vs offset of length {}",
                m.nrows(),
                c.len()
            )));
        }
        let lip = linalg::spectral_norm(&m)?;
        let (rows, cols) = m.shape();
        Ok(Self::new(cols, rows, move |x| &m * x + &c).with_lipschitz(lip))
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_fix_distance<D>(mut self, d: D) -> Self
    where
        D: Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        self.fix_distance = Some(Arc::new(d));
        self
    }

    pub(crate) fn with_fix_distance_arc(mut self, d: Option<DistanceFn>) -> Self {
        self.fix_distance = d;
        self
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn is_square(&self) -> bool {
        self.dim_in == self.dim_out
    }

    pub fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.dim_in, "operator input dimension");
        (self.eval)(x)
    }

    /// `‖F(x) − x‖` for a square operator.
    pub fn residual(&self, x: &DVector<f64>) -> f64 {
        (self.apply(x) - x).norm()
    }

    pub fn has_fix_distance(&self) -> bool {
        self.fix_distance.is_some()
    }

    pub fn fix_distance(&self, x: &DVector<f64>) -> Option<f64> {
        self.fix_distance.as_ref().map(|d| d(x))
    }

    pub(crate) fn fix_distance_fn(&self) -> Option<DistanceFn> {
        self.fix_distance.clone()
    }
}

/// `T_β = Id + β(T − Id)`.
///
/// Lipschitz metadata becomes `(1−β) + βL` for `β ≤ 1`; for `β > 0` the fixed
/// set is unchanged, so distance metadata carries over.
pub fn relax(t: &OperatorHandle, beta: f64) -> Result<OperatorHandle> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation parameter {beta} is negative"
        )));
    }
    if !t.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "relaxing a {}→{} operator",
            t.dim_in, t.dim_out
        )));
    }
    let inner = t.eval.clone();
    let mut out = OperatorHandle::new(t.dim_in, t.dim_out, move |x| x + (inner(x) - x) * beta);
    if beta <= 1.0 {
        if let Some(l) = t.lipschitz {
            out = out.with_lipschitz((1.0 - beta) + beta * l);
        }
    }
    if beta > 0.0 {
        out = out.with_fix_distance_arc(t.fix_distance_fn());
    }
    Ok(out)
}

/// `x ↦ x − ξ∇f(x)` for a convex `f` with `L`-Lipschitz gradient.
///
/// The Lipschitz metadata is `max(1, ξL − 1)`: exactly 1 (nonexpansive)
/// inside the window `ξ < 2/L`.
pub fn gradient_step<G>(dim: usize, grad: G, xi: f64, lipschitz_grad: f64) -> Result<OperatorHandle>
where
    G: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
{
    if !(xi > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gradient stepsize {xi} must be positive"
        )));
    }
    let lip = if xi * lipschitz_grad < 2.0 {
        1.0
    } else {
        xi * lipschitz_grad - 1.0
    };
    Ok(OperatorHandle::new(dim, dim, move |x| x - grad(x) * xi).with_lipschitz(lip))
}

/// Closed convex sets with closed-form Euclidean projections.
#[derive(Debug, Clone)]
pub enum ConvexSet {
    Box {
        lo: DVector<f64>,
        hi: DVector<f64>,
    },
    Ball {
        center: DVector<f64>,
        radius: f64,
    },
    Halfspace {
        a: DVector<f64>,
        b: f64,
    },
    /// `{x : Cx = d}` with `C` of full row rank.
    Affine(AffineSet),
}

/// `{x : Cx = d}` with a stored factorisation of `CCᵀ`.
#[derive(Debug, Clone)]
pub struct AffineSet {
    c: DMatrix<f64>,
    d: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

impl AffineSet {
    pub fn new(c: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        if c.nrows() != d.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraints vs rhs of length {}",
                c.nrows(),
                d.len()
            )));
        }
        let gram = &c * c.transpose();
        let scale = gram.diagonal().amax().max(f64::MIN_POSITIVE);
        let chol = Cholesky::new(gram).ok_or(Error::DegenerateConstraint)?;
        // a numerically singular Gram matrix can still factor; reject tiny pivots
        let min_pivot = chol
            .l_dirty()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v * v));
        if min_pivot <= 1e-12 * scale {
            return Err(Error::DegenerateConstraint);
        }
        Ok(Self { c, d, gram: chol })
    }

    pub fn constraint(&self) -> (&DMatrix<f64>, &DVector<f64>) {
        (&self.c, &self.d)
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        let viol = &self.c * x - &self.d;
        x - self.c.transpose() * self.gram.solve(&viol)
    }
}

impl ConvexSet {
    pub fn affine(c: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        AffineSet::new(c, d).map(ConvexSet::Affine)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { a, .. } => a.len(),
            ConvexSet::Affine(s) => s.c.ncols(),
        }
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConvexSet::Box { lo, hi } => DVector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i])),
            ConvexSet::Ball { center, radius } => {
                let off = x - center;
                let r = off.norm();
                if r <= *radius {
                    x.clone()
                } else {
                    center + off * (radius / r)
                }
            }
            ConvexSet::Halfspace { a, b } => {
                let excess = a.dot(x) - b;
                if excess <= 0.0 {
                    x.clone()
                } else {
                    x - a * (excess / a.norm_squared())
                }
            }
            ConvexSet::Affine(s) => s.project(x),
        }
    }

    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        (self.project(x) - x).norm()
    }
}

/// Euclidean projection onto `set`.
pub fn project(set: &ConvexSet, x: &DVector<f64>) -> DVector<f64> {
    set.project(x)
}

/// The projector onto `set` as an operator: nonexpansive, with exact
/// distance-to-fixed-set metadata.
pub fn projection_operator(set: ConvexSet) -> OperatorHandle {
    let dim = set.dim();
    let set = Arc::new(set);
    let s2 = set.clone();
    OperatorHandle::new(dim, dim, move |x| set.project(x))
        .with_lipschitz(1.0)
        .with_fix_distance(move |x| s2.distance(x))
}

/// `x ↦ (1/N) Σ F_i(x)`.
pub fn sum_aggregate(locals: &[OperatorHandle]) -> Result<OperatorHandle> {
    let first = locals
        .first()
        .ok_or_else(|| Error::InvalidParameter("no local operators".into()))?;
    let (din, dout) = (first.dim_in, first.dim_out);
    if let Some((i, op)) = locals
        .iter()
        .enumerate()
        .find(|(_, op)| op.dim_in != din || op.dim_out != dout)
    {
        return Err(Error::DimensionMismatch(format!(
            "local operator {i} is {}→{}, expected {din}→{dout}",
            op.dim_in, op.dim_out
        )));
    }
    if locals.len() == 1 {
        return Ok(first.clone());
    }
    let evals: Vec<EvalFn> = locals.iter().map(|op| op.eval.clone()).collect();
    let inv_n = 1.0 / locals.len() as f64;
    let mut out = OperatorHandle::new(din, dout, move |x| {
        let mut acc = DVector::zeros(dout);
        for f in &evals {
            acc += f(x);
        }
        acc * inv_n
    });
    let lips: Option<Vec<f64>> = locals.iter().map(|op| op.lipschitz).collect();
    if let Some(ls) = lips {
        out = out.with_lipschitz(ls.iter().sum::<f64>() * inv_n);
    }
    Ok(out)
}

/// `x ↦ (𝙵_1(x), …, 𝙵_N(x))` where block outputs partition the input.
pub fn block_aggregate(blocks: &[OperatorHandle]) -> Result<OperatorHandle> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidParameter("no block operators".into()))?;
    let din = first.dim_in;
    let total: usize = blocks.iter().map(|b| b.dim_out).sum();
    if let Some((i, b)) = blocks.iter().enumerate().find(|(_, b)| b.dim_in != din) {
        return Err(Error::DimensionMismatch(format!(
            "block {i} reads {} inputs, expected {din}",
            b.dim_in
        )));
    }
    if total != din {
        return Err(Error::DimensionMismatch(format!(
            "block outputs sum to {total}, input has {din}"
        )));
    }
    if blocks.len() == 1 {
        return Ok(first.clone());
    }
    let parts: Vec<(usize, EvalFn)> = blocks.iter().map(|b| (b.dim_out, b.eval.clone())).collect();
    let mut out = OperatorHandle::new(din, din, move |x| {
        let mut y = DVector::zeros(din);
        let mut off = 0;
        for (d, f) in &parts {
            y.rows_mut(off, *d).copy_from(&f(x));
            off += d;
        }
        y
    });
    let lips: Option<Vec<f64>> = blocks.iter().map(|b| b.lipschitz).collect();
    if let Some(ls) = lips {
        // ‖F(x)−F(y)‖² = Σ‖𝙵_i(x)−𝙵_i(y)‖² ≤ ΣL_i²‖x−y‖²
        out = out.with_lipschitz(ls.iter().map(|l| l * l).sum::<f64>().sqrt());
    }
    Ok(out)
}

/// Componentwise uniform sampling on `[lo, hi]^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformSampler {
    pub lo: f64,
    pub hi: f64,
}

impl Default for UniformSampler {
    fn default() -> Self {
        Self {
            lo: -10.0,
            hi: 10.0,
        }
    }
}

impl UniformSampler {
    pub fn sample<R: Rng>(&self, dim: usize, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| rng.random_range(self.lo..=self.hi))
    }
}

/// Sampled linear-regularity constant.
#[derive(Debug, Clone)]
pub struct RegularityEstimate {
    pub kappa_hat: f64,
    pub samples: usize,
    pub max_ratio_point: DVector<f64>,
}

/// `max d_Fix(x) / ‖F(x) − x‖` over `n_samples` draws, skipping points with a
/// residual below `1e-12`. Draws are a prefix-stable stream of `seed`, so the
/// estimate is nondecreasing in `n_samples`.
pub fn estimate_regularity(
    f: &OperatorHandle,
    sampler: &UniformSampler,
    n_samples: usize,
    seed: u64,
) -> Result<RegularityEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "n_samples must be at least 1".into(),
        ));
    }
    let dist = f.fix_distance_fn().ok_or(Error::MissingFixDistance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for _ in 0..n_samples {
        let x = sampler.sample(f.dim_in, &mut rng);
        let res = f.residual(&x);
        if res < 1e-12 {
            continue;
        }
        let ratio = dist(&x) / res;
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, x));
        }
    }
    let (kappa_hat, max_ratio_point) = best.ok_or(Error::NoInformativeSamples)?;
    Ok(RegularityEstimate {
        kappa_hat,
        samples: n_samples,
        max_ratio_point,
    })
}

/// Outcome of a sampled nonexpansiveness check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    pub violations: usize,
    /// Largest `‖F(x)−y‖ − ‖x−y‖` seen (negative means uniformly contractive).
    pub worst_margin: f64,
}

/// Counts sampled pairs `(x, y)`, `y` cycling through `fixed_points`, with
/// `‖F(x) − y‖ > ‖x − y‖ + 1e-9`.
pub fn check_quasi_nonexpansive(
    f: &OperatorHandle,
    fixed_points: &[DVector<f64>],
    sampler: &UniformSampler,
    n_samples: usize,
    seed: u64,
) -> Result<ExpansionReport> {
    if fixed_points.is_empty() {
        return Err(Error::InvalidParameter("no fixed points supplied".into()));
    }
    for (index, y) in fixed_points.iter().enumerate() {
        let residual = f.residual(y);
        if residual > FIXED_POINT_TOL {
            return Err(Error::NotAFixedPoint { index, residual });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ExpansionReport {
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
    };
    for s in 0..n_samples {
        let y = &fixed_points[s % fixed_points.len()];
        let x = sampler.sample(f.dim_in, &mut rng);
        let margin = (f.apply(&x) - y).norm() - (&x - y).norm();
        report.worst_margin = report.worst_margin.max(margin);
        if margin > FIXED_POINT_TOL {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Counts sampled pairs `(x, y)` with `‖F(x) − F(y)‖ > ‖x − y‖ + 1e-9`.
pub fn check_nonexpansive(
    f: &OperatorHandle,
    sampler: &UniformSampler,
    n_samples: usize,
    seed: u64,
) -> ExpansionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ExpansionReport {
        violations: 0,
        worst_margin: f64::NEG_INFINITY,
    };
    for _ in 0..n_samples {
        let x = sampler.sample(f.dim_in, &mut rng);
        let y = sampler.sample(f.dim_in, &mut rng);
        let margin = (f.apply(&x) - f.apply(&y)).norm() - (&x - &y).norm();
        report.worst_margin = report.worst_margin.max(margin);
        if margin > FIXED_POINT_TOL {
            report.violations += 1;
        }
    }
    report
}
