//! Distributed operator playing for block-separable problems
//! `F = (𝙵_1, …, 𝙵_N)` under partial-decision information, the rate matrix
//! `Θ(α)` and the full-information comparison iteration.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::dot::StepsizeBound;
use crate::error::{Error, Result};
use crate::linalg;
use crate::network::Network;
use crate::operators::OperatorHandle;

/// Every agent's estimate of the full decision vector.
///
/// Row `i` of `estimates` is `x^i`; its `j`-th block (columns
/// `offsets[j]..offsets[j] + dims[j]`) is agent `i`'s estimate of agent `j`'s
/// decision, and the diagonal block is agent `i`'s actual decision.
#[derive(Debug, Clone)]
pub struct DopState {
    pub k: usize,
    pub estimates: DMatrix<f64>,
    block_dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl DopState {
    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn n_agents(&self) -> usize {
        self.block_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.estimates.ncols()
    }

    /// `x^i`.
    pub fn estimate(&self, i: usize) -> DVector<f64> {
        self.estimates.row(i).transpose()
    }

    /// Agent `i`'s estimate of block `j`.
    pub fn block(&self, i: usize, j: usize) -> DVector<f64> {
        self.estimates
            .row(i)
            .columns(self.offsets[j], self.block_dims[j])
            .transpose()
    }

    /// The actual joint decision `(x_1, …, x_N)` read off the diagonal blocks.
    pub fn decisions(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.total_dim());
        for i in 0..self.n_agents() {
            out.rows_mut(self.offsets[i], self.block_dims[i])
                .copy_from(&self.block(i, i));
        }
        out
    }

    /// `max_{i,j} ‖x^i − x^j‖`.
    pub fn disagreement(&self) -> f64 {
        let n = self.n_agents();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.estimates.row(i) - self.estimates.row(j)).norm());
            }
        }
        worst
    }
}

fn block_layout(problem: &[OperatorHandle]) -> Result<(Vec<usize>, Vec<usize>)> {
    if problem.is_empty() {
        return Err(Error::InvalidParameter("no block operators".into()));
    }
    let dims: Vec<usize> = problem.iter().map(|op| op.dim_out()).collect();
    let total: usize = dims.iter().sum();
    if let Some((i, op)) = problem
        .iter()
        .enumerate()
        .find(|(_, op)| op.dim_in() != total)
    {
        return Err(Error::DimensionMismatch(format!(
            "block operator {i} reads {} inputs, blocks total {total}",
            op.dim_in()
        )));
    }
    let offsets = dims
        .iter()
        .scan(0, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    Ok((dims, offsets))
}

/// Row `i` of `x0` is agent `i`'s initial full estimate.
pub fn dop_init(problem: &[OperatorHandle], net: &Network, x0: &DMatrix<f64>) -> Result<DopState> {
    if problem.len() != net.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} block operators for {} agents",
            problem.len(),
            net.n()
        )));
    }
    let (block_dims, offsets) = block_layout(problem)?;
    let total: usize = block_dims.iter().sum();
    if x0.nrows() != net.n() || x0.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "initial estimates are {}×{}, expected {}×{total}",
            x0.nrows(),
            x0.ncols(),
            net.n()
        )));
    }
    Ok(DopState {
        k: 0,
        estimates: x0.clone(),
        block_dims,
        offsets,
    })
}

/// One synchronous round: every agent averages all blocks with its
/// in-neighbours and corrects its own block with gain `α/π_i`.
pub fn dop_step(
    state: &DopState,
    net: &Network,
    alpha: f64,
    problem: &[OperatorHandle],
) -> Result<DopState> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {alpha} outside (0, 1)"
        )));
    }
    let mut next = net.a() * &state.estimates;
    for (i, op) in problem.iter().enumerate() {
        let (off, d) = (state.offsets[i], state.block_dims[i]);
        let own = op.apply(&state.estimate(i));
        let gain = alpha / net.pi()[i];
        let mut row = next.row_mut(i);
        let mut blk = row.columns_mut(off, d);
        let corr = (own.transpose() - &blk) * gain;
        blk += corr;
    }
    Ok(DopState {
        k: state.k + 1,
        estimates: next,
        block_dims: state.block_dims.clone(),
        offsets: state.offsets.clone(),
    })
}

/// `x̃ = Σ_i π_i x^i`.
pub fn weighted_average(state: &DopState, net: &Network) -> DVector<f64> {
    net.pi_average(&state.estimates)
}

/// `x_i ← x_i + α(𝙵_i(x) − x_i)` for every block, with the true joint vector.
pub fn full_info_step(
    x: &DVector<f64>,
    alpha: f64,
    problem: &[OperatorHandle],
) -> Result<DVector<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {alpha} outside (0, 1)"
        )));
    }
    let (dims, offsets) = block_layout(problem)?;
    if x.len() != dims.iter().sum::<usize>() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for blocks {dims:?}",
            x.len()
        )));
    }
    let mut out = x.clone();
    for (i, op) in problem.iter().enumerate() {
        let fi = op.apply(x);
        let mut blk = out.rows_mut(offsets[i], dims[i]);
        blk += (fi - x.rows(offsets[i], dims[i])) * alpha;
    }
    Ok(out)
}

/// Scalars entering `Θ(α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaParams {
    pub rho1: f64,
    pub c1: f64,
    pub c2: f64,
    pub l_bar: f64,
    pub kappa: f64,
    pub delta: f64,
    pub pi_min: f64,
    pub n_agents: usize,
}

/// `N − 1 + (1 − π̲)²/π̲²`.
pub fn varpi(n_agents: usize, pi_min: f64) -> f64 {
    n_agents as f64 - 1.0 + (1.0 - pi_min).powi(2) / (pi_min * pi_min)
}

impl ThetaParams {
    pub fn from_network(net: &Network, l_bar: f64, kappa: f64, delta: f64) -> Self {
        let c = net.constants();
        Self {
            rho1: net.rho1(),
            c1: c.c1,
            c2: c.c2,
            l_bar,
            kappa,
            delta,
            pi_min: net.pi().min(),
            n_agents: net.n(),
        }
    }

    pub fn varpi(&self) -> f64 {
        varpi(self.n_agents, self.pi_min)
    }

    pub fn theta5(&self) -> f64 {
        2.0 * self.c2 * (self.varpi() * (self.l_bar * self.l_bar + 1.0)).sqrt() / self.c1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrixTheta {
    pub entries: Matrix2<f64>,
    pub params: ThetaParams,
    pub alpha: f64,
}

impl RateMatrixTheta {
    pub fn spectral_radius(&self) -> f64 {
        let e = &self.entries;
        linalg::spectral_radius_2x2(e[(0, 0)], e[(0, 1)], e[(1, 0)], e[(1, 1)])
    }
}

pub fn build_rate_matrix_theta(params: &ThetaParams, alpha: f64) -> Result<RateMatrixTheta> {
    let p = params;
    if !(p.kappa > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "kappa {} must be positive",
            p.kappa
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {alpha} is negative"
        )));
    }
    let vp = p.varpi();
    #[rustfmt::skip]
    let entries = Matrix2::new(
        p.rho1 + alpha * p.theta5(),           2.0 * alpha * p.c2 * (2.0 * vp).sqrt(),
        alpha * (p.l_bar + 1.0) / p.c1,        1.0 - p.delta * alpha / (4.0 * p.kappa * p.kappa),
    );
    Ok(RateMatrixTheta {
        entries,
        params: *p,
        alpha,
    })
}

/// `alpha_c` here is the first root of `ρ(Θ(α)) = 1`.
pub fn max_stepsize_dop(params: &ThetaParams) -> Result<StepsizeBound> {
    let delta = params.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    let alpha_l =
        linalg::first_unit_crossing(|a| Ok(build_rate_matrix_theta(params, a)?.spectral_radius()))?;
    let alpha_max = alpha_l.min(1.0 - delta);
    if build_rate_matrix_theta(params, 0.99 * alpha_max)?.spectral_radius() >= 1.0 {
        return Err(Error::NoAdmissibleStepsize);
    }
    Ok(StepsizeBound {
        alpha_c: alpha_l,
        alpha_max,
    })
}
