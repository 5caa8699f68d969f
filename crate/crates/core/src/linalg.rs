//! Small dense linear-algebra kernels shared by the network geometry and the
//! stepsize solvers: singular values and Perron roots by power iteration, and
//! the scan-and-bisect driver used to locate the smallest stepsize at which a
//! rate matrix reaches spectral radius one.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap for the singular-value power iteration.
pub const SPECTRAL_NORM_CAP: usize = 1_000_000;
/// Relative tolerance on the dominant eigenvalue of `GᵀG`.
pub const SPECTRAL_NORM_TOL: f64 = 1e-12;
/// Iteration cap for the nonnegative spectral-radius iteration.
pub const SPECTRAL_RADIUS_CAP: usize = 100_000;
/// Collatz-Wielandt bracket width at which the spectral radius is accepted.
pub const SPECTRAL_RADIUS_TOL: f64 = 1e-13;

/// Deterministic, strictly positive, non-uniform start vector.
///
/// Must not be proportional to the ones vector: `A - A_inf` annihilates it.
pub fn start_vector(n: usize) -> DVector<f64> {
    DVector::from_fn(n, |i, _| {
        1.0 + 0.5 * ((i as f64 + 1.0) * 0.754_877_666).fract()
    })
}

/// Largest singular value of `g`, by power iteration on `GᵀG`.
///
/// Stops once the eigen-residual `‖GᵀGv − λv‖` falls below `tol·λ`, which
/// bounds the eigenvalue error even when the top singular value is repeated.
pub fn spectral_norm_with(g: &DMatrix<f64>, tol: f64, cap: usize) -> Result<f64> {
    if g.is_empty() {
        return Ok(0.0);
    }
    let gram = g.transpose() * g;
    let mut v = start_vector(gram.ncols());
    v /= v.norm();
    for _ in 0..cap {
        let w = &gram * &v;
        let lambda = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 || lambda <= f64::MIN_POSITIVE {
            // v landed in the kernel; try once more from a different start
            // before concluding the matrix is zero.
            if gram.iter().all(|&e| e == 0.0) {
                return Ok(0.0);
            }
            v = DVector::from_fn(v.len(), |i, _| if i % 2 == 0 { 1.0 } else { -0.5 });
            v /= v.norm();
            continue;
        }
        let residual = (&w - &v * lambda).norm();
        if residual <= tol * lambda {
            return Ok(lambda.sqrt());
        }
        v = w / wn;
    }
    Err(Error::PowerIterationCap(cap))
}

/// Largest singular value (spectral 2-norm) with the default tolerances.
pub fn spectral_norm(g: &DMatrix<f64>) -> Result<f64> {
    spectral_norm_with(g, SPECTRAL_NORM_TOL, SPECTRAL_NORM_CAP)
}

/// Spectral radius of a square nonnegative matrix by power iteration.
///
/// The iterate is kept positive and max-normalised; the Collatz-Wielandt
/// quotients `(Mv)_i / v_i` bracket the Perron root. Components that have
/// decayed below `1e-14` of the largest are ignored, which lets reducible
/// matrices (for instance a rate matrix at zero stepsize) terminate.
pub fn spectral_radius_nonneg(m: &DMatrix<f64>) -> Result<f64> {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    debug_assert!(m.iter().all(|&e| e >= 0.0), "matrix must be nonnegative");
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    let mut v = DVector::from_element(n, 1.0);
    for _ in 0..SPECTRAL_RADIUS_CAP {
        let w = m * &v;
        let vmax = v.max();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..n {
            if v[i] > 1e-14 * vmax {
                let q = w[i] / v[i];
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        let wmax = w.max();
        if wmax == 0.0 {
            return Ok(0.0);
        }
        if hi - lo <= SPECTRAL_RADIUS_TOL * hi.max(1.0) {
            return Ok(0.5 * (lo + hi));
        }
        v = w / wmax;
    }
    Err(Error::PowerIterationCap(SPECTRAL_RADIUS_CAP))
}

/// Closed-form spectral radius of a nonnegative 2×2 matrix `[[a, b], [c, d]]`.
pub fn spectral_radius_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let half_tr = 0.5 * (a + d);
    let disc = (0.5 * (a - d)).powi(2) + b * c;
    half_tr + disc.max(0.0).sqrt()
}

/// Number of geometric grid points scanned in `(GRID_START, 1]`.
pub const GRID_POINTS: usize = 400;
/// Smallest scanned stepsize; the rate matrices have radius exactly one at 0.
pub const GRID_START: f64 = 1e-6;
/// Absolute bisection tolerance on the stepsize root.
pub const ROOT_TOL: f64 = 1e-10;

/// Smallest `a` in `[GRID_START, 1]` with `radius(a) = 1`, or `1.0` when the
/// radius stays below one across the whole scan.
///
/// Errors with [`Error::NoAdmissibleStepsize`] if the radius is already at or
/// above one at the first grid point.
pub fn first_unit_crossing<F>(mut radius: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let ratio = (1.0 / GRID_START).powf(1.0 / (GRID_POINTS - 1) as f64);
    let mut prev = GRID_START;
    if radius(prev)? >= 1.0 {
        return Err(Error::NoAdmissibleStepsize);
    }
    for i in 1..GRID_POINTS {
        let cur = if i == GRID_POINTS - 1 {
            1.0
        } else {
            GRID_START * ratio.powi(i as i32)
        };
        if radius(cur)? >= 1.0 {
            let (mut lo, mut hi) = (prev, cur);
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if radius(mid)? >= 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = cur;
    }
    Ok(1.0)
}
