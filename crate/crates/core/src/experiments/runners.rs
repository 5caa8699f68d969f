//! Complete runs of every algorithm with per-iteration diagnostics.
//!
//! A run stops once the distance to the fixed set, and the consensus error
//! where the algorithm has one, are both at or below `tol`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::dop::{self, DopState};
use crate::dot::{self, DotMode, DotState};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::operators::OperatorHandle;

use super::baselines::{dkm_baseline_step, dkm_stepsize};
use super::trace::TraceRecord;

/// Euclidean projection onto `Fix(F)`.
pub type Projector<'a> = &'a dyn Fn(&DVector<f64>) -> DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Constant stepsize, or `α₀` for the diminishing baseline.
    pub alpha: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Record iterations `k` with `k mod trace_stride ∈ {0, 1}` and the last
    /// one, so every sampled iteration keeps its successor for the recursion
    /// check.
    pub trace_stride: usize,
    pub record_wall_time: bool,
}

impl RunOptions {
    pub fn new(alpha: f64, max_iters: usize, tol: f64) -> Self {
        Self {
            alpha,
            max_iters,
            tol,
            trace_stride: 1,
            record_wall_time: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome<S> {
    pub trace: Vec<TraceRecord>,
    /// Steps taken.
    pub iters: usize,
    pub converged: bool,
    pub final_state: S,
    pub final_fix_dist: f64,
}

struct Recorder {
    stride: usize,
    start: Option<Instant>,
    trace: Vec<TraceRecord>,
}

impl Recorder {
    fn new(opts: &RunOptions) -> Result<Self> {
        if opts.trace_stride == 0 {
            return Err(Error::InvalidParameter(
                "trace stride must be at least 1".into(),
            ));
        }
        Ok(Self {
            stride: opts.trace_stride,
            start: opts.record_wall_time.then(Instant::now),
            trace: Vec::new(),
        })
    }

    fn wants(&self, k: usize) -> bool {
        self.stride == 1 || k % self.stride <= 1
    }

    fn push(&mut self, mut rec: TraceRecord) {
        rec.wall_ns = self.start.map(|t| t.elapsed().as_nanos() as u64);
        self.trace.push(rec);
    }
}

fn max_row_distance(x: &DMatrix<f64>, project: Projector) -> f64 {
    x.row_iter()
        .map(|r| {
            let xi = r.transpose();
            (project(&xi) - &xi).norm()
        })
        .fold(0.0, f64::max)
}

fn mean_operator_residual(locals: &[OperatorHandle], x: &DVector<f64>) -> f64 {
    let n = locals.len() as f64;
    let avg = locals
        .iter()
        .fold(DVector::zeros(x.len()), |acc, f| acc + f.apply(x))
        / n;
    (avg - x).norm()
}

fn block_operator_residual(blocks: &[OperatorHandle], x: &DVector<f64>) -> f64 {
    let mut sq = 0.0;
    let mut off = 0;
    for b in blocks {
        let d = b.dim_out();
        sq += (b.apply(x) - x.rows(off, d)).norm_squared();
        off += d;
    }
    sq.sqrt()
}

fn dot_record(
    state: &DotState,
    net: &Network,
    locals: &[OperatorHandle],
    project: Projector,
) -> TraceRecord {
    let xbar = net.pi_average(&state.x);
    let fix_dist = max_row_distance(&state.x, project);
    let z3 = (net.n() as f64).sqrt() * (project(&xbar) - &xbar).norm();
    let consensus = net.consensus_error(&state.x);
    let tracking = net.tracking_error(&state.y);
    TraceRecord {
        k: state.k,
        consensus_err: Some(consensus),
        tracking_err: Some(tracking),
        fix_dist: Some(fix_dist),
        residual_norm: Some(mean_operator_residual(locals, &xbar)),
        z: vec![consensus, tracking, z3],
        wall_ns: None,
    }
}

pub fn run_dot(
    locals: &[OperatorHandle],
    project: Projector,
    net: &Network,
    x0: &DMatrix<f64>,
    mode: DotMode,
    opts: &RunOptions,
) -> Result<RunOutcome<DotState>> {
    let mut rec = Recorder::new(opts)?;
    let mut state = dot::dot_init(locals, net, x0, mode)?;
    loop {
        let fix = max_row_distance(&state.x, project);
        let done = fix <= opts.tol && net.consensus_error(&state.x) <= opts.tol;
        let last = done || state.k >= opts.max_iters;
        if last || rec.wants(state.k) {
            rec.push(dot_record(&state, net, locals, project));
        }
        if last {
            return Ok(RunOutcome {
                trace: rec.trace,
                iters: state.k,
                converged: done,
                final_state: state,
                final_fix_dist: fix,
            });
        }
        state = dot::dot_step(&state, net, opts.alpha, locals)?;
    }
}

fn dop_record(
    state: &DopState,
    net: &Network,
    blocks: &[OperatorHandle],
    project: Projector,
) -> TraceRecord {
    let xt = dop::weighted_average(state, net);
    let consensus = net.consensus_error(&state.estimates);
    let fix_tilde = (project(&xt) - &xt).norm();
    TraceRecord {
        k: state.k,
        consensus_err: Some(consensus),
        tracking_err: None,
        fix_dist: Some(max_row_distance(&state.estimates, project)),
        residual_norm: Some(block_operator_residual(blocks, &xt)),
        z: vec![consensus, fix_tilde],
        wall_ns: None,
    }
}

pub fn run_dop(
    blocks: &[OperatorHandle],
    project: Projector,
    net: &Network,
    x0: &DMatrix<f64>,
    opts: &RunOptions,
) -> Result<RunOutcome<DopState>> {
    let mut rec = Recorder::new(opts)?;
    let mut state = dop::dop_init(blocks, net, x0)?;
    loop {
        let fix = max_row_distance(&state.estimates, project);
        let done = fix <= opts.tol && net.consensus_error(&state.estimates) <= opts.tol;
        let last = done || state.k >= opts.max_iters;
        if last || rec.wants(state.k) {
            rec.push(dop_record(&state, net, blocks, project));
        }
        if last {
            return Ok(RunOutcome {
                trace: rec.trace,
                iters: state.k,
                converged: done,
                final_state: state,
                final_fix_dist: fix,
            });
        }
        state = dop::dop_step(&state, net, opts.alpha, blocks)?;
    }
}

fn single_record(k: usize, x: &DVector<f64>, residual: f64, project: Projector) -> TraceRecord {
    TraceRecord {
        k,
        fix_dist: Some((project(x) - x).norm()),
        residual_norm: Some(residual),
        ..Default::default()
    }
}

/// Centralized KM with a constant stepsize.
pub fn run_km(
    f: &OperatorHandle,
    project: Projector,
    x0: &DVector<f64>,
    opts: &RunOptions,
) -> Result<RunOutcome<DVector<f64>>> {
    if !(opts.alpha > 0.0 && opts.alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stepsize {} outside (0, 1]",
            opts.alpha
        )));
    }
    if !f.is_square() || f.dim_in() != x0.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator {}→{} with start of length {}",
            f.dim_in(),
            f.dim_out(),
            x0.len()
        )));
    }
    let mut rec = Recorder::new(opts)?;
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let step = f.apply(&x) - &x;
        let fix = (project(&x) - &x).norm();
        let done = fix <= opts.tol;
        let last = done || k >= opts.max_iters;
        if last || rec.wants(k) {
            rec.push(single_record(k, &x, step.norm(), project));
        }
        if last {
            return Ok(RunOutcome {
                trace: rec.trace,
                iters: k,
                converged: done,
                final_state: x,
                final_fix_dist: fix,
            });
        }
        x += step * opts.alpha;
        k += 1;
    }
}

/// The full-information block iteration.
pub fn run_full_info(
    blocks: &[OperatorHandle],
    project: Projector,
    x0: &DVector<f64>,
    opts: &RunOptions,
) -> Result<RunOutcome<DVector<f64>>> {
    let mut rec = Recorder::new(opts)?;
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let fix = (project(&x) - &x).norm();
        let done = fix <= opts.tol;
        let last = done || k >= opts.max_iters;
        if last || rec.wants(k) {
            rec.push(single_record(
                k,
                &x,
                block_operator_residual(blocks, &x),
                project,
            ));
        }
        if last {
            return Ok(RunOutcome {
                trace: rec.trace,
                iters: k,
                converged: done,
                final_state: x,
                final_fix_dist: fix,
            });
        }
        x = dop::full_info_step(&x, opts.alpha, blocks)?;
        k += 1;
    }
}

/// The diminishing-stepsize consensus baseline with `α_k = α₀/(k+1)`.
pub fn run_dkm(
    locals: &[OperatorHandle],
    project: Projector,
    net: &Network,
    x0: &DMatrix<f64>,
    opts: &RunOptions,
) -> Result<RunOutcome<DMatrix<f64>>> {
    let mut rec = Recorder::new(opts)?;
    let mut x = x0.clone();
    let mut k = 0;
    loop {
        let consensus = net.consensus_error(&x);
        let fix = max_row_distance(&x, project);
        let done = fix <= opts.tol && consensus <= opts.tol;
        let last = done || k >= opts.max_iters;
        if last || rec.wants(k) {
            rec.push(TraceRecord {
                k,
                consensus_err: Some(consensus),
                fix_dist: Some(fix),
                residual_norm: Some(mean_operator_residual(locals, &net.pi_average(&x))),
                ..Default::default()
            });
        }
        if last {
            return Ok(RunOutcome {
                trace: rec.trace,
                iters: k,
                converged: done,
                final_state: x,
                final_fix_dist: fix,
            });
        }
        x = dkm_baseline_step(&x, net, dkm_stepsize(opts.alpha, k), locals)?;
        k += 1;
    }
}
