//! Comparison iterations: centralized Krasnosel'skiĭ–Mann and a
//! diminishing-stepsize consensus scheme.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::network::Network;
use crate::operators::OperatorHandle;

/// Stepsize sequence `α_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `α_k = α₀/(k+1)`.
    Diminishing(f64),
}

impl AlphaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match *self {
            AlphaSchedule::Constant(a) => a,
            AlphaSchedule::Diminishing(a0) => dkm_stepsize(a0, k),
        }
    }
}

pub fn dkm_stepsize(alpha0: f64, k: usize) -> f64 {
    alpha0 / (k as f64 + 1.0)
}

#[derive(Debug, Clone)]
pub struct KmTrajectory {
    /// `x_0, …, x_K`.
    pub iterates: Vec<DVector<f64>>,
    /// `‖F(x_k) − x_k‖` for every stored iterate.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

impl KmTrajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.iterates.last().expect("trajectory holds x_0")
    }
}

/// `x_{k+1} = x_k + α_k(F(x_k) − x_k)` until `‖F(x_k) − x_k‖ ≤ tol` or
/// `max_iters` steps.
pub fn km_centralized(
    f: &OperatorHandle,
    schedule: AlphaSchedule,
    x0: &DVector<f64>,
    max_iters: usize,
    tol: f64,
) -> Result<KmTrajectory> {
    if !f.is_square() || x0.len() != f.dim_in() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}→{} with start of length {}",
            f.dim_in(),
            f.dim_out(),
            x0.len()
        )));
    }
    let mut x = x0.clone();
    let mut fx = f.apply(&x);
    let mut res = (&fx - &x).norm();
    let mut traj = KmTrajectory {
        iterates: vec![x.clone()],
        residuals: vec![res],
        converged: res <= tol,
    };
    for k in 0..max_iters {
        if traj.converged {
            break;
        }
        let a = schedule.at(k);
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::InvalidParameter(format!(
                "stepsize {a} at k={k} outside [0, 1]"
            )));
        }
        x += (&fx - &x) * a;
        fx = f.apply(&x);
        res = (&fx - &x).norm();
        traj.iterates.push(x.clone());
        traj.residuals.push(res);
        traj.converged = res <= tol;
    }
    Ok(traj)
}

/// One round of `x_i ← v_i + α_k(F_i(v_i) − v_i)` with `v = Ax`.
pub fn dkm_baseline_step(
    x: &DMatrix<f64>,
    net: &Network,
    alpha_k: f64,
    locals: &[OperatorHandle],
) -> Result<DMatrix<f64>> {
    if !(alpha_k > 0.0 && alpha_k <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {alpha_k} outside (0, 1]"
        )));
    }
    if locals.len() != net.n() || x.nrows() != net.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} operators and {} rows for {} agents",
            locals.len(),
            x.nrows(),
            net.n()
        )));
    }
    let mut v = net.a() * x;
    for (i, op) in locals.iter().enumerate() {
        let vi = v.row(i).transpose();
        let step = (op.apply(&vi) - &vi) * alpha_k;
        let mut row = v.row_mut(i);
        row += step.transpose();
    }
    Ok(v)
}
