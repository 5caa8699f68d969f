//! Per-iteration diagnostics, the CSV trace format, log-linear rate fitting
//! and the residual-recursion check.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "k,consensus_err,tracking_err,fix_dist,residual_norm,z1,z2,z3,wall_ns";

/// Diagnostics of one iteration; fields that do not apply to an algorithm are
/// `None` and `z` is empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub consensus_err: Option<f64>,
    pub tracking_err: Option<f64>,
    pub fix_dist: Option<f64>,
    pub residual_norm: Option<f64>,
    pub z: Vec<f64>,
    pub wall_ns: Option<u64>,
}

/// A scalar column of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceField {
    ConsensusErr,
    TrackingErr,
    FixDist,
    ResidualNorm,
    /// Component of the residual vector, zero-based.
    Z(usize),
}

impl TraceRecord {
    pub fn get(&self, field: TraceField) -> Option<f64> {
        match field {
            TraceField::ConsensusErr => self.consensus_err,
            TraceField::TrackingErr => self.tracking_err,
            TraceField::FixDist => self.fix_dist,
            TraceField::ResidualNorm => self.residual_norm,
            TraceField::Z(i) => self.z.get(i).copied(),
        }
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Writes the header and one row per record.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            cell(r.consensus_err),
            cell(r.tracking_err),
            cell(r.fix_dist),
            cell(r.residual_norm),
            cell(r.z.first().copied()),
            cell(r.z.get(1).copied()),
            cell(r.z.get(2).copied()),
            r.wall_ns.map(|t| t.to_string()).unwrap_or_default(),
        )?;
    }
    out.flush()
}

/// Least-squares fit of `log(value)` against `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// `exp(slope)`: the per-iteration contraction factor.
    pub rate: f64,
    /// Coefficient of determination; 0 when the field is constant.
    pub r_squared: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 20;
pub const DEFAULT_SKIP_FRACTION: f64 = 0.1;

/// Fits over the records after the first `skip_fraction` share, keeping only
/// values above `1e-14`.
pub fn fit_linear_rate(
    trace: &[TraceRecord],
    field: TraceField,
    skip_fraction: f64,
) -> Result<RateFit> {
    if !(0.0..1.0).contains(&skip_fraction) {
        return Err(Error::InvalidParameter(format!(
            "skip fraction {skip_fraction} outside [0, 1)"
        )));
    }
    let skip = (trace.len() as f64 * skip_fraction).floor() as usize;
    let pts: Vec<(f64, f64)> = trace[skip..]
        .iter()
        .filter_map(|r| {
            r.get(field)
                .filter(|&v| v > 1e-14)
                .map(|v| (r.k as f64, v.ln()))
        })
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            got: pts.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n * (1.0 + my * my) {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(RateFit {
        rate: slope.exp(),
        r_squared,
        points: pts.len(),
    })
}

/// Outcome of checking `z_{k+1} ≤ M z_k` along a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCheck {
    pub holds: bool,
    /// Largest `(z_{k+1} − M z_k)_j` seen, before slack.
    pub worst_violation: f64,
    /// Iteration `k` of the pair attaining `worst_violation`.
    pub at_k: Option<usize>,
}

/// Checks every pair of consecutive records (`k` and `k + 1`) against
/// `z_{k+1} ≤ M z_k + 1e-9·(1 + ‖z_k‖)` componentwise.
pub fn verify_residual_recursion(
    trace: &[TraceRecord],
    m: &DMatrix<f64>,
) -> Result<RecursionCheck> {
    let dim = m.nrows();
    let mut check = RecursionCheck {
        holds: true,
        worst_violation: f64::NEG_INFINITY,
        at_k: None,
    };
    for pair in trace.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        if next.k != cur.k + 1 {
            continue;
        }
        if cur.z.len() != dim || next.z.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "residual vectors of length {}/{} for a {dim}×{dim} rate matrix",
                cur.z.len(),
                next.z.len()
            )));
        }
        let zk = DVector::from_column_slice(&cur.z);
        let bound = m * &zk;
        let slack = 1e-9 * (1.0 + zk.norm());
        for j in 0..dim {
            let excess = next.z[j] - bound[j];
            if excess > check.worst_violation {
                check.worst_violation = excess;
                check.at_k = Some(cur.k);
            }
            if excess > slack {
                check.holds = false;
            }
        }
    }
    Ok(check)
}
