//! Distributed operator tracking for sum-separable problems
//! `F = (1/N) Σ F_i`, together with the rate matrix `M(α)` and its stepsize
//! bound.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};
use crate::linalg;
use crate::network::Network;
use crate::operators::OperatorHandle;

/// How each agent corrects for the imbalance of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DotMode {
    /// Divide by the exact `Nν_i`.
    #[default]
    ExactNu,
    /// Divide by a scalar `w_i` that is itself mixed by `B` from `w_i = 1`.
    WTracking,
}

/// Iterate of the tracking scheme. Rows of `x` and `y` are agents.
#[derive(Debug, Clone)]
pub struct DotState {
    pub k: usize,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Imbalance correctors, present only in [`DotMode::WTracking`].
    pub w: Option<DVector<f64>>,
    pub mode: DotMode,
    /// `F_i(x_i)` at the current iterate, reused by the next step.
    fx: DMatrix<f64>,
}

impl DotState {
    /// `F_i(x_{i,k})` stacked by agent.
    pub fn local_values(&self) -> &DMatrix<f64> {
        &self.fx
    }
}

fn check_problem(problem: &[OperatorHandle], net: &Network) -> Result<usize> {
    if problem.len() != net.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} local operators for {} agents",
            problem.len(),
            net.n()
        )));
    }
    let dim = problem[0].dim_in();
    for (i, op) in problem.iter().enumerate() {
        if op.dim_in() != dim || op.dim_out() != dim {
            return Err(Error::DimensionMismatch(format!(
                "local operator {i} is {}→{}, expected {dim}→{dim}",
                op.dim_in(),
                op.dim_out()
            )));
        }
    }
    Ok(dim)
}

fn evaluate_rows(problem: &[OperatorHandle], x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for (i, op) in problem.iter().enumerate() {
        let xi = x.row(i).transpose();
        out.set_row(i, &op.apply(&xi).transpose());
    }
    out
}

pub fn dot_init(
    problem: &[OperatorHandle],
    net: &Network,
    x0: &DMatrix<f64>,
    mode: DotMode,
) -> Result<DotState> {
    let dim = check_problem(problem, net)?;
    if x0.nrows() != net.n() || x0.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial stack is {}×{}, expected {}×{dim}",
            x0.nrows(),
            x0.ncols(),
            net.n()
        )));
    }
    let fx = evaluate_rows(problem, x0);
    let w = match mode {
        DotMode::ExactNu => None,
        DotMode::WTracking => Some(DVector::from_element(net.n(), 1.0)),
    };
    Ok(DotState {
        k: 0,
        x: x0.clone(),
        y: fx.clone(),
        w,
        mode,
        fx,
    })
}

/// One synchronous round of the tracking scheme.
pub fn dot_step(
    state: &DotState,
    net: &Network,
    alpha: f64,
    problem: &[OperatorHandle],
) -> Result<DotState> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {alpha} outside (0, 1)"
        )));
    }
    let n = net.n();
    let mixed = net.a() * &state.x;
    let mut x = mixed.clone() * (1.0 - alpha);
    for i in 0..n {
        let scale = match (&state.w, state.mode) {
            (Some(w), DotMode::WTracking) => w[i],
            _ => n as f64 * net.nu()[i],
        };
        let mut row = x.row_mut(i);
        row += state.y.row(i) * (alpha / scale);
    }
    let fx = evaluate_rows(problem, &x);
    let y = net.b() * &state.y + &fx - &state.fx;
    let w = state.w.as_ref().map(|w| net.b() * w);
    Ok(DotState {
        k: state.k + 1,
        x,
        y,
        w,
        mode: state.mode,
        fx,
    })
}

/// `‖Σ y_i − Σ F_i(x_i)‖ / (1 + ‖Σ F_i(x_i)‖)`, with the right side evaluated
/// afresh from the operators.
pub fn tracking_residual(state: &DotState, problem: &[OperatorHandle]) -> f64 {
    let total_f = evaluate_rows(problem, &state.x).row_sum();
    let total_y = state.y.row_sum();
    (total_y - &total_f).norm() / (1.0 + total_f.norm())
}

/// Scalars entering `M(α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub rho1: f64,
    pub rho2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub l_bar: f64,
    pub kappa: f64,
    pub delta: f64,
    pub norm_dnu_inv: f64,
    pub norm_a_minus_i: f64,
    pub n_agents: usize,
}

impl RateParams {
    pub fn from_network(net: &Network, l_bar: f64, kappa: f64, delta: f64) -> Result<Self> {
        let c = net.constants();
        Ok(Self {
            rho1: net.rho1(),
            rho2: net.rho2(),
            c1: c.c1,
            c2: c.c2,
            c3: c.c3,
            c4: c.c4,
            l_bar,
            kappa,
            delta,
            norm_dnu_inv: net.norm_dnu_inv(),
            norm_a_minus_i: net.norm_a_minus_identity()?,
            n_agents: net.n(),
        })
    }

    pub fn theta1(&self) -> f64 {
        self.c4 * self.norm_dnu_inv / self.n_agents as f64
    }

    pub fn theta2(&self) -> f64 {
        self.c2 * self.l_bar * ((self.n_agents as f64).sqrt() + 1.0) / (self.c1 * self.c3)
    }

    pub fn theta3(&self) -> f64 {
        self.rho1 + self.l_bar
    }

    pub fn theta4(&self) -> f64 {
        self.norm_a_minus_i
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrixM {
    pub entries: Matrix3<f64>,
    pub params: RateParams,
    pub alpha: f64,
}

impl RateMatrixM {
    pub fn spectral_radius(&self) -> Result<f64> {
        linalg::spectral_radius_nonneg(&self.as_dmatrix())
    }

    pub fn as_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(3, 3, self.entries.iter().copied())
    }
}

pub fn build_rate_matrix_m(params: &RateParams, alpha: f64) -> Result<RateMatrixM> {
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
    let (t1, t2, t3, t4) = (p.theta1(), p.theta2(), p.theta3(), p.theta4());
    let sqrt_n = (p.n_agents as f64).sqrt();
    let rho3 = 1.0 - p.delta * alpha / (4.0 * p.kappa * p.kappa);
    if rho3 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "kappa {} too small for stepsize {alpha}: contraction factor is negative",
            p.kappa
        )));
    }
    #[rustfmt::skip]
    let entries = Matrix3::new(
        (1.0 - alpha) * p.rho1,          alpha * p.c2 * t1,               0.0,
        t2 * (alpha * t3 + t4),          p.rho2 + alpha * t1 * t2,        2.0 * alpha * p.c1 * t2,
        alpha * p.l_bar / p.c1,          alpha * sqrt_n * t1 / p.c1,      rho3,
    );
    Ok(RateMatrixM {
        entries,
        params: *p,
        alpha,
    })
}

/// Stepsize bound: `alpha_c` is the first root of `ρ(M(α)) = 1`, and
/// `alpha_max = min(1 − δ, alpha_c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepsizeBound {
    pub alpha_c: f64,
    pub alpha_max: f64,
}

pub fn max_stepsize_dot(params: &RateParams) -> Result<StepsizeBound> {
    let delta = params.delta;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} outside (0, 1)"
        )));
    }
    let alpha_c =
        linalg::first_unit_crossing(|a| build_rate_matrix_m(params, a)?.spectral_radius())?;
    let alpha_max = alpha_c.min(1.0 - delta);
    if build_rate_matrix_m(params, 0.99 * alpha_max)?.spectral_radius()? >= 1.0 {
        return Err(Error::NoAdmissibleStepsize);
    }
    Ok(StepsizeBound { alpha_c, alpha_max })
}
