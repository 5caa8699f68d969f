//! Configuration-driven command line: network generation, stepsize reports
//! and complete runs with CSV traces.
//!
//! Machine-readable output (`key=value`) goes to stdout, progress to stderr.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::dop::{self, ThetaParams};
use crate::dot::{self, DotMode, RateParams};
use crate::error::Error;
use crate::experiments::{self, RunOptions, TraceField, TraceRecord};
use crate::network::{generate_strongly_connected, DirectedGraph, Network};
use crate::operators::{estimate_regularity, OperatorHandle, UniformSampler, KAPPA_SAFETY};

pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;

const DEFAULT_DELTA: f64 = 0.1;
const DEFAULT_REGULARITY_SAMPLES: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "dotdop",
    version,
    about = "Distributed fixed-point iterations over directed networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an algorithm and write its trace.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Report the network constants and the stepsize bound.
    Stepsize {
        config: PathBuf,
        /// Use this regularity constant instead of estimating one.
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Generate a strongly connected graph as an edge list.
    GraphGen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// Fixed stepsize, replacing the configured choice.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Regularity constant, used as is.
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dot,
    DotW,
    Dop,
    Km,
    Dkm,
    FullInfo,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Dot => "dot",
            Algorithm::DotW => "dot_w",
            Algorithm::Dop => "dop",
            Algorithm::Km => "km",
            Algorithm::Dkm => "dkm",
            Algorithm::FullInfo => "full_info",
        }
    }

    fn needs_network(self) -> bool {
        !matches!(self, Algorithm::Km | Algorithm::FullInfo)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    Paper,
    Custom {
        e: Vec<f64>,
        p: Vec<f64>,
        b: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    SumQuadratic {
        #[serde(alias = "N")]
        n_agents: usize,
        #[serde(alias = "n")]
        dim: usize,
        xi: f64,
        #[serde(default = "paper_scheme")]
        scheme: SchemeConfig,
    },
    BlockGame {
        #[serde(alias = "N")]
        n_agents: usize,
        d: usize,
        r: f64,
        seed: u64,
    },
}

fn paper_scheme() -> SchemeConfig {
    SchemeConfig::Paper
}

impl ProblemConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            ProblemConfig::SumQuadratic { .. } => "sum_quadratic",
            ProblemConfig::BlockGame { .. } => "block_game",
        }
    }

    fn n_agents(&self) -> usize {
        match *self {
            ProblemConfig::SumQuadratic { n_agents, .. }
            | ProblemConfig::BlockGame { n_agents, .. } => n_agents,
        }
    }
}

/// Either `path` or all of `n`, `extra_edge_prob`, `seed`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub path: Option<PathBuf>,
    pub n: Option<usize>,
    pub extra_edge_prob: Option<f64>,
    pub seed: Option<u64>,
}

/// Exactly one of `auto_delta` and `fixed`.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    pub auto_delta: Option<f64>,
    pub fixed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub graph: Option<GraphConfig>,
    pub alpha: AlphaConfig,
    pub max_iters: usize,
    pub tol: f64,
    pub out_path: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
    #[serde(default = "default_samples")]
    pub regularity_samples: usize,
}

fn default_stride() -> usize {
    1
}

fn default_samples() -> usize {
    DEFAULT_REGULARITY_SAMPLES
}

/// A configuration or setup problem; maps to exit code 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("algorithm `{algorithm}` cannot solve problem `{problem}`")]
    Incompatible {
        algorithm: &'static str,
        problem: &'static str,
    },
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_owned(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        // edge lists are found next to the config; outputs stay relative to the caller
        if let (Some(g), Some(dir)) = (cfg.graph.as_mut(), path.parent()) {
            if let Some(p) = g.path.as_mut().filter(|p| p.is_relative()) {
                *p = dir.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let compatible = matches!(
            (self.algorithm, &self.problem),
            (
                Algorithm::Dot | Algorithm::DotW | Algorithm::Km | Algorithm::Dkm,
                ProblemConfig::SumQuadratic { .. }
            ) | (
                Algorithm::Dop | Algorithm::FullInfo,
                ProblemConfig::BlockGame { .. }
            )
        );
        if !compatible {
            return Err(CliError::Incompatible {
                algorithm: self.algorithm.tag(),
                problem: self.problem.tag(),
            });
        }
        match (self.alpha.auto_delta, self.alpha.fixed) {
            (Some(d), None) if d > 0.0 && d < 1.0 => {}
            (Some(d), None) => {
                return Err(CliError::Invalid(format!(
                    "alpha.auto_delta = {d} must lie in (0, 1)"
                )))
            }
            (None, Some(a)) if a > 0.0 && a <= 1.0 => {}
            (None, Some(a)) => {
                return Err(CliError::Invalid(format!(
                    "alpha.fixed = {a} must lie in (0, 1]"
                )))
            }
            _ => {
                return Err(CliError::Invalid(
                    "set exactly one of alpha.auto_delta and alpha.fixed".into(),
                ))
            }
        }
        if !(self.tol >= 0.0) {
            return Err(CliError::Invalid(format!(
                "tol = {} must be nonnegative",
                self.tol
            )));
        }
        if self.trace_stride == 0 || self.regularity_samples == 0 {
            return Err(CliError::Invalid(
                "trace_stride and regularity_samples must be positive".into(),
            ));
        }
        if self.algorithm.needs_network() {
            let g = self.graph.as_ref().ok_or_else(|| {
                CliError::Invalid(format!(
                    "algorithm `{}` needs a [graph] table",
                    self.algorithm.tag()
                ))
            })?;
            let random = g.n.is_some() || g.extra_edge_prob.is_some() || g.seed.is_some();
            match (&g.path, random) {
                (Some(_), false) => {}
                (None, true)
                    if g.n.is_some() && g.extra_edge_prob.is_some() && g.seed.is_some() =>
                {
                    if g.n != Some(self.problem.n_agents()) {
                        return Err(CliError::Invalid(format!(
                            "graph has {} nodes but the problem has {} agents",
                            g.n.unwrap_or(0),
                            self.problem.n_agents()
                        )));
                    }
                }
                _ => {
                    return Err(CliError::Invalid(
                        "[graph] needs either `path` or all of `n`, `extra_edge_prob`, `seed`"
                            .into(),
                    ))
                }
            }
        }
        Ok(())
    }

    fn delta(&self) -> f64 {
        self.alpha.auto_delta.unwrap_or(DEFAULT_DELTA)
    }
}

fn build_network(cfg: &RunConfig) -> Result<Network, CliError> {
    let g = cfg
        .graph
        .as_ref()
        .ok_or_else(|| CliError::Invalid("missing [graph] table".into()))?;
    let graph = match (&g.path, g.n, g.extra_edge_prob, g.seed) {
        (Some(path), ..) => DirectedGraph::read_edge_list(path)?,
        (None, Some(n), Some(p), Some(seed)) => generate_strongly_connected(n, p, seed)?,
        _ => return Err(CliError::Invalid("incomplete [graph] table".into())),
    };
    if graph.n() != cfg.problem.n_agents() {
        return Err(CliError::Invalid(format!(
            "graph has {} nodes but the problem has {} agents",
            graph.n(),
            cfg.problem.n_agents()
        )));
    }
    Ok(Network::new(graph)?)
}

/// The instantiated problem with its operators and fixed-set projection.
enum Instance {
    Sum {
        prob: experiments::SumQuadraticProblem,
        locals: Vec<OperatorHandle>,
        global: OperatorHandle,
    },
    Game {
        game: experiments::BlockQuadraticGame,
        blocks: Vec<OperatorHandle>,
        global: OperatorHandle,
    },
}

impl Instance {
    fn build(cfg: &ProblemConfig) -> Result<Self, CliError> {
        match cfg {
            ProblemConfig::SumQuadratic {
                n_agents,
                dim,
                xi,
                scheme,
            } => {
                let scheme = match scheme {
                    SchemeConfig::Paper => experiments::QuadraticScheme::Paper,
                    SchemeConfig::Custom { e, p, b } => experiments::QuadraticScheme::Custom {
                        e: DVector::from_column_slice(e),
                        p: p.clone(),
                        b: b.iter().map(|bi| DVector::from_column_slice(bi)).collect(),
                    },
                };
                let prob = experiments::make_sum_quadratic(*n_agents, *dim, scheme, *xi)?;
                if prob.fix_level.is_none() {
                    return Err(CliError::Invalid(
                        "sum_quadratic data must have every b_i parallel to E".into(),
                    ));
                }
                let locals = prob.local_operators();
                let global = prob.global_operator();
                Ok(Instance::Sum {
                    prob,
                    locals,
                    global,
                })
            }
            ProblemConfig::BlockGame {
                n_agents,
                d,
                r,
                seed,
            } => {
                let game = experiments::make_block_game(*n_agents, *d, *seed, *r)?;
                let blocks = game.block_operators()?;
                let global = game.global_operator();
                Ok(Instance::Game {
                    game,
                    blocks,
                    global,
                })
            }
        }
    }

    fn global(&self) -> &OperatorHandle {
        match self {
            Instance::Sum { global, .. } | Instance::Game { global, .. } => global,
        }
    }

    fn l_bar(&self) -> f64 {
        let ops = match self {
            Instance::Sum { locals, .. } => locals,
            Instance::Game { blocks, .. } => blocks,
        };
        ops.iter()
            .filter_map(|op| op.lipschitz())
            .fold(0.0, f64::max)
    }

    fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Instance::Sum { prob, .. } => prob.project_fix(x).expect("checked at build time"),
            Instance::Game { game, .. } => game.project_fix(x),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Instance::Sum { prob, .. } => (prob.n_agents, prob.dim),
            Instance::Game { game, .. } => (game.n_agents, game.total_dim()),
        }
    }
}

/// The regularity constant fed to the stepsize solvers and the raw value
/// reported as `kappa_hat`.
fn regularity(
    cfg: &RunConfig,
    inst: &Instance,
    kappa_override: Option<f64>,
) -> Result<(f64, f64), CliError> {
    if let Some(k) = kappa_override {
        if !(k > 0.0) {
            return Err(CliError::Invalid(format!("--kappa {k} must be positive")));
        }
        return Ok((k, k));
    }
    let est = estimate_regularity(
        inst.global(),
        &UniformSampler::default(),
        cfg.regularity_samples,
        cfg.seed,
    )?;
    Ok((est.kappa_hat, est.kappa_hat * KAPPA_SAFETY))
}

/// `key=value` lines describing the network and the stepsize bound.
struct StepsizeReport {
    lines: Vec<(String, f64)>,
    alpha_max: f64,
    model: RateModel,
}

/// Parameters of the rate matrix certifying a run.
enum RateModel {
    Dot(RateParams),
    Dop(ThetaParams),
}

impl RateModel {
    fn matrix(&self, alpha: f64) -> Result<DMatrix<f64>, Error> {
        match self {
            RateModel::Dot(p) => Ok(dot::build_rate_matrix_m(p, alpha)?.as_dmatrix()),
            RateModel::Dop(p) => {
                let e = dop::build_rate_matrix_theta(p, alpha)?.entries;
                Ok(DMatrix::from_iterator(2, 2, e.iter().copied()))
            }
        }
    }
}

fn stepsize_report(
    cfg: &RunConfig,
    inst: &Instance,
    net: &Network,
    kappa_override: Option<f64>,
) -> Result<StepsizeReport, CliError> {
    let (kappa_hat, kappa) = regularity(cfg, inst, kappa_override)?;
    let c = net.constants();
    let delta = cfg.delta();
    let l_bar = inst.l_bar();
    let mut lines: Vec<(String, f64)> = vec![
        ("rho1".into(), net.rho1()),
        ("rho2".into(), net.rho2()),
        ("c1".into(), c.c1),
        ("c2".into(), c.c2),
        ("c3".into(), c.c3),
        ("c4".into(), c.c4),
        ("kappa_hat".into(), kappa_hat),
        ("kappa".into(), kappa),
        ("l_bar".into(), l_bar),
        ("delta".into(), delta),
    ];
    let (alpha_max, model) = match inst {
        Instance::Sum { .. } => {
            let p = RateParams::from_network(net, l_bar, kappa, delta)?;
            lines.push(("theta1".into(), p.theta1()));
            lines.push(("theta2".into(), p.theta2()));
            lines.push(("theta3".into(), p.theta3()));
            lines.push(("theta4".into(), p.theta4()));
            let b = dot::max_stepsize_dot(&p)?;
            lines.push(("alpha_c".into(), b.alpha_c));
            lines.push(("alpha_max".into(), b.alpha_max));
            (b.alpha_max, RateModel::Dot(p))
        }
        Instance::Game { .. } => {
            let p = ThetaParams::from_network(net, l_bar, kappa, delta);
            lines.push(("varpi".into(), p.varpi()));
            lines.push(("theta5".into(), p.theta5()));
            let b = dop::max_stepsize_dop(&p)?;
            lines.push(("alpha_l".into(), b.alpha_c));
            lines.push(("alpha_max".into(), b.alpha_max));
            (b.alpha_max, RateModel::Dop(p))
        }
    };
    Ok(StepsizeReport {
        lines,
        alpha_max,
        model,
    })
}

fn initial_stack(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // row-major draw order so that the stack does not depend on storage layout
    let mut x = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            x[(i, j)] = rng.random_range(0.0..1.0);
        }
    }
    x
}

/// Result of one `run` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub alpha_bound: f64,
    pub iters: usize,
    pub converged: bool,
    pub final_fix_dist: f64,
    pub rate: f64,
    pub r2: f64,
}

impl RunSummary {
    pub fn line(&self) -> String {
        format!(
            "algorithm={} alpha={} alpha_bound={} iters={} final_fix_dist={} rate={} r2={}",
            self.algorithm.tag(),
            self.alpha,
            self.alpha_bound,
            self.iters,
            self.final_fix_dist,
            self.rate,
            self.r2
        )
    }
}

/// Executes a validated configuration, writing the trace to `out_path`.
pub fn execute_run(cfg: &RunConfig, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let mut cfg = cfg.clone();
    if let Some(a) = overrides.alpha {
        cfg.alpha = AlphaConfig {
            auto_delta: None,
            fixed: Some(a),
        };
    }
    if let Some(m) = overrides.max_iters {
        cfg.max_iters = m;
    }
    if let Some(out) = &overrides.out {
        cfg.out_path = out.clone();
    }
    cfg.validate()?;

    let inst = Instance::build(&cfg.problem)?;
    let algo = cfg.algorithm;
    let delta = cfg.delta();
    let net = if algo.needs_network() || algo == Algorithm::FullInfo {
        Some(build_network_for(&cfg, algo)?)
    } else {
        None
    };

    let (alpha_bound, model) = match (algo, &net) {
        (Algorithm::Km | Algorithm::Dkm, _) => (1.0 - delta, None),
        (_, Some(net)) => match stepsize_report(&cfg, &inst, net, overrides.kappa) {
            Ok(rep) => (rep.alpha_max, Some(rep.model)),
            Err(e) if cfg.alpha.fixed.is_some() => {
                eprintln!("warning: stepsize bound unavailable ({e})");
                (f64::NAN, None)
            }
            Err(e) => return Err(e),
        },
        (_, None) => (1.0 - delta, None),
    };
    let alpha = cfg.alpha.fixed.unwrap_or(alpha_bound);
    eprintln!(
        "running {} with alpha={alpha} for at most {} iterations",
        algo.tag(),
        cfg.max_iters
    );

    let (rows, cols) = inst.dims();
    let x0 = initial_stack(cfg.seed, rows, cols);
    let opts = RunOptions {
        alpha,
        max_iters: cfg.max_iters,
        tol: cfg.tol,
        trace_stride: cfg.trace_stride,
        record_wall_time: cfg.record_wall_time,
    };
    let project = |x: &DVector<f64>| inst.project(x);
    let (trace, iters, converged, final_fix_dist) = match (&inst, algo) {
        (Instance::Sum { locals, .. }, Algorithm::Dot | Algorithm::DotW) => {
            let mode = if algo == Algorithm::Dot {
                DotMode::ExactNu
            } else {
                DotMode::WTracking
            };
            let net = net.as_ref().expect("network built for dot");
            let o = experiments::run_dot(locals, &project, net, &x0, mode, &opts)?;
            (o.trace, o.iters, o.converged, o.final_fix_dist)
        }
        (Instance::Sum { locals, .. }, Algorithm::Dkm) => {
            let net = net.as_ref().expect("network built for dkm");
            let o = experiments::run_dkm(locals, &project, net, &x0, &opts)?;
            (o.trace, o.iters, o.converged, o.final_fix_dist)
        }
        (Instance::Sum { global, .. }, Algorithm::Km) => {
            let o = experiments::run_km(global, &project, &x0.row(0).transpose(), &opts)?;
            (o.trace, o.iters, o.converged, o.final_fix_dist)
        }
        (Instance::Game { blocks, .. }, Algorithm::Dop) => {
            let net = net.as_ref().expect("network built for dop");
            let o = experiments::run_dop(blocks, &project, net, &x0, &opts)?;
            (o.trace, o.iters, o.converged, o.final_fix_dist)
        }
        (Instance::Game { blocks, .. }, Algorithm::FullInfo) => {
            let o = experiments::run_full_info(blocks, &project, &x0.row(0).transpose(), &opts)?;
            (o.trace, o.iters, o.converged, o.final_fix_dist)
        }
        _ => unreachable!("compatibility checked by validate"),
    };

    write_trace(&cfg.out_path, &trace)?;
    if let Some(model) = model.filter(|_| algo != Algorithm::FullInfo) {
        match model
            .matrix(alpha)
            .and_then(|m| experiments::verify_residual_recursion(&trace, &m))
        {
            Ok(c) => eprintln!(
                "residual recursion at alpha={alpha}: holds={} worst_excess={:e}",
                c.holds, c.worst_violation
            ),
            Err(e) => eprintln!("residual recursion at alpha={alpha}: not checked ({e})"),
        }
    }
    let (rate, r2) = experiments::fit_linear_rate(
        &trace,
        TraceField::FixDist,
        experiments::trace::DEFAULT_SKIP_FRACTION,
    )
    .map(|f| (f.rate, f.r_squared))
    .unwrap_or((f64::NAN, f64::NAN));
    eprintln!(
        "{} after {iters} iterations, trace written to {}",
        if converged {
            "converged"
        } else {
            "not converged"
        },
        cfg.out_path.display()
    );
    Ok(RunSummary {
        algorithm: algo,
        alpha,
        alpha_bound,
        iters,
        converged,
        final_fix_dist,
        rate,
        r2,
    })
}

/// The full-information baseline has no network of its own; its automatic
/// stepsize is the bound of the distributed method on the configured graph.
fn build_network_for(cfg: &RunConfig, algo: Algorithm) -> Result<Network, CliError> {
    if algo == Algorithm::FullInfo && cfg.graph.is_none() {
        return Err(CliError::Invalid(
            "full_info needs a [graph] table to size its stepsize".into(),
        ));
    }
    build_network(cfg)
}

fn write_trace(path: &Path, trace: &[TraceRecord]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = BufWriter::new(File::create(path)?);
    experiments::write_trace_csv(trace, file)?;
    Ok(())
}

/// Entry point shared by the binary.
pub fn run_cli(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run { config, overrides } => RunConfig::load(&config)
            .and_then(|cfg| execute_run(&cfg, &overrides))
            .map(|s| {
                println!("{}", s.line());
                if s.converged {
                    EXIT_CONVERGED
                } else {
                    EXIT_NOT_CONVERGED
                }
            }),
        Command::Stepsize { config, kappa } => RunConfig::load(&config).and_then(|cfg| {
            let inst = Instance::build(&cfg.problem)?;
            let net = build_network(&cfg)?;
            let rep = stepsize_report(&cfg, &inst, &net, kappa)?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for (k, v) in &rep.lines {
                writeln!(out, "{k}={v}")?;
            }
            Ok(EXIT_CONVERGED)
        }),
        Command::GraphGen { n, p, seed, out } => (|| {
            let g = generate_strongly_connected(n, p, seed)?;
            match out {
                Some(path) => g.write_edge_list(path)?,
                None => print!("{}", g.to_edge_list()),
            }
            Ok(EXIT_CONVERGED)
        })(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
