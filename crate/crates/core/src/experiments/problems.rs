//! The two application problems: a sum of scalar-composite quadratics for
//! distributed optimization and a quadratic game with rank-deficient costs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{gradient_step, OperatorHandle};

/// How the sum-quadratic data are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadraticScheme {
    /// `E = 1ᵀ`, `p_i = i`, `b_i = (i/n)·1`.
    Paper,
    /// Explicit data; `e` has length `n`, `p` and `b` one entry per agent.
    Custom {
        e: DVector<f64>,
        p: Vec<f64>,
        b: Vec<DVector<f64>>,
    },
}

/// `f(x) = (1/N) Σ f_i(x)` with `f_i(x) = (Ex − p_i)² + b_iᵀx`.
#[derive(Debug, Clone)]
pub struct SumQuadraticProblem {
    pub n_agents: usize,
    pub dim: usize,
    pub e: DVector<f64>,
    pub p: Vec<f64>,
    pub b: Vec<DVector<f64>>,
    pub xi: f64,
    /// Lipschitz constant of every `∇f_i` and of `∇f`: `2‖E‖²`.
    pub lipschitz: f64,
    /// `{x : Ex = s*}` when every `b_i` is a multiple of `Eᵀ`.
    pub fix_level: Option<f64>,
}

/// Multipliers `β_i` with `b_i = β_i Eᵀ`, if they exist.
fn b_multipliers(e: &DVector<f64>, b: &[DVector<f64>]) -> Option<Vec<f64>> {
    let ee = e.norm_squared();
    b.iter()
        .map(|bi| {
            let beta = e.dot(bi) / ee;
            let tol = 1e-12 * (1.0 + bi.norm());
            ((bi - e * beta).norm() <= tol).then_some(beta)
        })
        .collect()
}

pub fn make_sum_quadratic(
    n_agents: usize,
    dim: usize,
    scheme: QuadraticScheme,
    xi: f64,
) -> Result<SumQuadraticProblem> {
    if n_agents == 0 || dim == 0 {
        return Err(Error::InvalidParameter(
            "sum-quadratic problem needs N ≥ 1 and n ≥ 1".into(),
        ));
    }
    let (e, p, b) = match scheme {
        QuadraticScheme::Paper => {
            let e = DVector::from_element(dim, 1.0);
            let p = (1..=n_agents).map(|i| i as f64).collect();
            let b = (1..=n_agents)
                .map(|i| DVector::from_element(dim, i as f64 / dim as f64))
                .collect();
            (e, p, b)
        }
        QuadraticScheme::Custom { e, p, b } => {
            if e.len() != dim
                || p.len() != n_agents
                || b.len() != n_agents
                || b.iter().any(|bi| bi.len() != dim)
            {
                return Err(Error::DimensionMismatch(format!(
                    "custom data do not match N={n_agents}, n={dim}"
                )));
            }
            if e.norm_squared() == 0.0 {
                return Err(Error::InvalidParameter("E must be nonzero".into()));
            }
            (e, p, b)
        }
    };
    let lipschitz = 2.0 * e.norm_squared();
    if !(xi > 0.0 && xi < 2.0 / lipschitz) {
        return Err(Error::InvalidParameter(format!(
            "xi {xi} outside (0, {})",
            2.0 / lipschitz
        )));
    }
    let fix_level = b_multipliers(&e, &b).map(|betas| {
        let n = n_agents as f64;
        let p_bar = p.iter().sum::<f64>() / n;
        let beta_bar = betas.iter().sum::<f64>() / n;
        p_bar - 0.5 * beta_bar
    });
    Ok(SumQuadraticProblem {
        n_agents,
        dim,
        e,
        p,
        b,
        xi,
        lipschitz,
        fix_level,
    })
}

impl SumQuadraticProblem {
    pub fn grad_local(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        &self.e * (2.0 * (self.e.dot(x) - self.p[i])) + &self.b[i]
    }

    /// `f(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        let s = self.e.dot(x);
        let total: f64 = (0..self.n_agents)
            .map(|i| (s - self.p[i]).powi(2) + self.b[i].dot(x))
            .sum();
        total / self.n_agents as f64
    }

    /// `F_i = Id − ξ∇f_i`.
    pub fn local_operators(&self) -> Vec<OperatorHandle> {
        (0..self.n_agents)
            .map(|i| {
                let (e, p, b) = (self.e.clone(), self.p[i], self.b[i].clone());
                gradient_step(
                    self.dim,
                    move |x| &e * (2.0 * (e.dot(x) - p)) + &b,
                    self.xi,
                    self.lipschitz,
                )
                .expect("xi validated at construction")
            })
            .collect()
    }

    /// `F = Id − ξ∇f`, carrying the exact distance to its fixed set when that
    /// set is known.
    pub fn global_operator(&self) -> OperatorHandle {
        let n = self.n_agents as f64;
        let e = self.e.clone();
        let p_bar = self.p.iter().sum::<f64>() / n;
        let b_bar = self
            .b
            .iter()
            .fold(DVector::zeros(self.dim), |acc, bi| acc + bi)
            / n;
        let op = gradient_step(
            self.dim,
            move |x| &e * (2.0 * (e.dot(x) - p_bar)) + &b_bar,
            self.xi,
            self.lipschitz,
        )
        .expect("xi validated at construction");
        match self.fix_level {
            Some(s) => {
                let e = self.e.clone();
                let en = e.norm();
                op.with_fix_distance(move |x| (e.dot(x) - s).abs() / en)
            }
            None => op,
        }
    }

    /// Euclidean projection onto `{x : Ex = s*}`.
    pub fn project_fix(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        self.fix_level
            .map(|s| x - &self.e * ((self.e.dot(x) - s) / self.e.norm_squared()))
    }

    pub fn fix_distance(&self, x: &DVector<f64>) -> Option<f64> {
        self.fix_level
            .map(|s| (self.e.dot(x) - s).abs() / self.e.norm())
    }
}

/// Optimal level `Ex = s*` of a sum-quadratic problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticOptimum {
    /// Closed-form minimiser of the reduced function.
    pub s_star: f64,
    /// Golden-section minimiser of the same function.
    pub s_golden: f64,
}

const GOLDEN_TOL: f64 = 1e-12;

fn golden_section<G: Fn(f64) -> f64>(g: G, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut gc, mut gd) = (g(c), g(d));
    while hi - lo > GOLDEN_TOL * (1.0 + lo.abs().max(hi.abs())) {
        if gc < gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Minimises `f` restricted to its dependence on `s = Ex`.
///
/// With `b_i = β_i Eᵀ`, `f(x) = g(Ex)` for
/// `g(s) = (1/N) Σ [(s − p_i)² + β_i s]`, whose minimiser is
/// `p̄ − β̄/2`. Both the golden-section and the closed-form values are
/// returned; they must agree to `1e-6·(1 + |s*|)`.
pub fn optimizer_oracle_sum_quadratic(prob: &SumQuadraticProblem) -> Result<QuadraticOptimum> {
    let betas = b_multipliers(&prob.e, &prob.b).ok_or(Error::NotSeparable)?;
    let n = prob.n_agents as f64;
    let g = |s: f64| {
        prob.p
            .iter()
            .zip(&betas)
            .map(|(p, beta)| (s - p).powi(2) + beta * s)
            .sum::<f64>()
            / n
    };
    let beta_bar = betas.iter().sum::<f64>() / n;
    let p_min = prob.p.iter().copied().fold(f64::INFINITY, f64::min);
    let p_max = prob.p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.5 * beta_bar.abs() + 1.0;
    let s_golden = golden_section(g, p_min - pad, p_max + pad);
    let s_star = prob.p.iter().sum::<f64>() / n - 0.5 * beta_bar;
    if (s_golden - s_star).abs() > 1e-6 * (1.0 + s_star.abs()) {
        return Err(Error::InvalidParameter(format!(
            "golden-section optimum {s_golden} disagrees with closed form {s_star}"
        )));
    }
    Ok(QuadraticOptimum { s_star, s_golden })
}

/// `J_i(x) = r_i (E_i x_i)² + s_i E_i x_i + Σ_{j≠i} x_iᵀ c_ij x_j` with
/// `E_i = 1ᵀ` and couplings `c_ij = γ_ij E_iᵀE_j`.
#[derive(Debug, Clone)]
pub struct BlockQuadraticGame {
    pub n_agents: usize,
    pub dims: Vec<usize>,
    pub r_cost: Vec<f64>,
    pub s_cost: Vec<f64>,
    /// `γ_ij`, zero on the diagonal.
    pub gamma: DMatrix<f64>,
    /// Operator stepsize `r` in `𝙵_i = Id_i − r∇_iJ_i`.
    pub r: f64,
    offsets: Vec<usize>,
    z_star: DVector<f64>,
}

/// Draws a game with `r_i ~ U(0.5, 1.5)`, `s_i ~ U(−1, 1)` and
/// `γ_ij ~ U(−0.1/N, 0.1/N)`.
pub fn make_block_game(n_agents: usize, d: usize, seed: u64, r: f64) -> Result<BlockQuadraticGame> {
    if n_agents == 0 || d == 0 {
        return Err(Error::InvalidParameter("game needs N ≥ 1 and d ≥ 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "operator stepsize r = {r} must be positive"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r_cost: Vec<f64> = (0..n_agents).map(|_| rng.random_range(0.5..1.5)).collect();
    let s_cost: Vec<f64> = (0..n_agents).map(|_| rng.random_range(-1.0..1.0)).collect();
    let scale = 0.1 / n_agents as f64;
    let mut gamma = DMatrix::zeros(n_agents, n_agents);
    for i in 0..n_agents {
        for j in 0..n_agents {
            if i != j {
                gamma[(i, j)] = rng.random_range(-scale..scale);
            }
        }
    }
    BlockQuadraticGame::new(vec![d; n_agents], r_cost, s_cost, gamma, r)
}

impl BlockQuadraticGame {
    pub fn new(
        dims: Vec<usize>,
        r_cost: Vec<f64>,
        s_cost: Vec<f64>,
        gamma: DMatrix<f64>,
        r: f64,
    ) -> Result<Self> {
        let n = dims.len();
        if r_cost.len() != n || s_cost.len() != n || gamma.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "game data do not match {n} players"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(
                "block dimensions must be positive".into(),
            ));
        }
        if let Some(ri) = r_cost.iter().find(|&&ri| !(ri > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "cost curvature r_i = {ri} must be positive"
            )));
        }
        let mut h = gamma.clone();
        h.fill_diagonal(0.0);
        for i in 0..n {
            h[(i, i)] = 2.0 * r_cost[i];
        }
        let rhs = -DVector::from_column_slice(&s_cost);
        let z_star = h.lu().solve(&rhs).ok_or(Error::DegenerateConstraint)?;
        let offsets = dims
            .iter()
            .scan(0, |acc, &d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        Ok(Self {
            n_agents: n,
            dims,
            r_cost,
            s_cost,
            gamma,
            r,
            offsets,
            z_star,
        })
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `z_j = E_j x_j` for every player.
    fn aggregates(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_agents, |j, _| {
            x.rows(self.offsets[j], self.dims[j]).sum()
        })
    }

    fn grad_from_aggregates(&self, i: usize, z: &DVector<f64>) -> DVector<f64> {
        let mut coupling = 0.0;
        for j in 0..self.n_agents {
            if j != i {
                coupling += self.gamma[(i, j)] * z[j];
            }
        }
        DVector::from_element(
            self.dims[i],
            2.0 * self.r_cost[i] * z[i] + self.s_cost[i] + coupling,
        )
    }

    /// `∇_i J_i(x_i, x_{−i})`.
    pub fn partial_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        self.grad_from_aggregates(i, &self.aggregates(x))
    }

    /// The pseudo-gradient `U(x) = (∇_1J_1, …, ∇_NJ_N)`.
    pub fn pseudo_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.aggregates(x);
        let mut out = DVector::zeros(self.total_dim());
        for i in 0..self.n_agents {
            out.rows_mut(self.offsets[i], self.dims[i])
                .copy_from(&self.grad_from_aggregates(i, &z));
        }
        out
    }

    /// Jacobian of `U`, assembled entrywise.
    pub fn pseudo_gradient_jacobian(&self) -> DMatrix<f64> {
        let t = self.total_dim();
        let mut k = DMatrix::zeros(t, t);
        for i in 0..self.n_agents {
            for j in 0..self.n_agents {
                let coef = if i == j {
                    2.0 * self.r_cost[i]
                } else {
                    self.gamma[(i, j)]
                };
                for a in 0..self.dims[i] {
                    for b in 0..self.dims[j] {
                        k[(self.offsets[i] + a, self.offsets[j] + b)] = coef;
                    }
                }
            }
        }
        k
    }

    /// `𝙵_i = Id_i − r∇_iJ_i` as maps from the joint vector to block `i`, with
    /// Lipschitz constants from their Jacobians.
    pub fn block_operators(&self) -> Result<Vec<OperatorHandle>> {
        let jac = self.pseudo_gradient_jacobian();
        let t = self.total_dim();
        (0..self.n_agents)
            .map(|i| {
                let (off, d) = (self.offsets[i], self.dims[i]);
                let mut ji = -jac.rows(off, d) * self.r;
                for a in 0..d {
                    ji[(a, off + a)] += 1.0;
                }
                let lip = linalg::spectral_norm(&ji)?;
                let game = self.clone();
                Ok(OperatorHandle::new(t, d, move |x| {
                    x.rows(off, d) - game.partial_gradient(i, x) * game.r
                })
                .with_lipschitz(lip))
            })
            .collect()
    }

    /// `F = Id − rU` on the joint vector, with the exact distance to the
    /// equilibrium set.
    pub fn global_operator(&self) -> OperatorHandle {
        let g1 = self.clone();
        let g2 = self.clone();
        let t = self.total_dim();
        OperatorHandle::new(t, t, move |x| x - g1.pseudo_gradient(x) * g1.r)
            .with_fix_distance(move |x| g2.fix_distance(x))
    }

    /// Equilibrium aggregate levels: every NE has `E_i x_i = z*_i`.
    pub fn equilibrium_levels(&self) -> &DVector<f64> {
        &self.z_star
    }

    /// Euclidean projection onto the equilibrium set.
    pub fn project_fix(&self, x: &DVector<f64>) -> DVector<f64> {
        let z = self.aggregates(x);
        let mut out = x.clone();
        for i in 0..self.n_agents {
            let shift = (z[i] - self.z_star[i]) / self.dims[i] as f64;
            out.rows_mut(self.offsets[i], self.dims[i])
                .add_scalar_mut(-shift);
        }
        out
    }

    pub fn fix_distance(&self, x: &DVector<f64>) -> f64 {
        let z = self.aggregates(x);
        (0..self.n_agents)
            .map(|i| (z[i] - self.z_star[i]).powi(2) / self.dims[i] as f64)
            .sum::<f64>()
            .sqrt()
    }
}

/// `max_i ‖∇_i J_i(x)‖`.
pub fn ne_residual(game: &BlockQuadraticGame, x: &DVector<f64>) -> f64 {
    let u = game.pseudo_gradient(x);
    (0..game.n_agents)
        .map(|i| u.rows(game.offsets[i], game.dims[i]).norm())
        .fold(0.0, f64::max)
}

/// Least-norm solution of the stacked linear system `U(x) = 0`.
#[derive(Debug, Clone)]
pub struct NashOracle {
    pub x: DVector<f64>,
    /// `‖Kx + U(0)‖` at the returned point.
    pub residual: f64,
}

pub fn nash_oracle(game: &BlockQuadraticGame) -> Result<NashOracle> {
    let k = game.pseudo_gradient_jacobian();
    let offset = game.pseudo_gradient(&DVector::zeros(game.total_dim()));
    let pinv = k
        .clone()
        .pseudo_inverse(1e-10)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let x = -(pinv * &offset);
    let residual = (&k * &x + &offset).norm();
    Ok(NashOracle { x, residual })
}

/// Sampled monotonicity constants of `U` relative to the equilibrium set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityEstimate {
    /// `min (x − x*)ᵀ(U(x) − U(x*)) / ‖x − x*‖²`.
    pub mu_hat: f64,
    /// `max ‖U(x) − U(x*)‖ / ‖x − x*‖`.
    pub q_hat: f64,
}

/// Both ratios are taken with `x* = P_NE(x)`, the nearest equilibrium.
pub fn estimate_monotonicity(
    game: &BlockQuadraticGame,
    n_samples: usize,
    seed: u64,
) -> MonotonicityEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu_hat = f64::INFINITY;
    let mut q_hat = 0.0f64;
    for _ in 0..n_samples {
        let x = DVector::from_fn(game.total_dim(), |_, _| rng.random_range(-10.0..=10.0));
        let xs = game.project_fix(&x);
        let dx = &x - &xs;
        let dn2 = dx.norm_squared();
        if dn2 < 1e-24 {
            continue;
        }
        let du = game.pseudo_gradient(&x) - game.pseudo_gradient(&xs);
        mu_hat = mu_hat.min(dx.dot(&du) / dn2);
        q_hat = q_hat.max(du.norm() / dn2.sqrt());
    }
    MonotonicityEstimate { mu_hat, q_hat }
}
