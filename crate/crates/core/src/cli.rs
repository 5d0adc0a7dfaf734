//! Command-line configuration and pipelines.
//!
//! A run is described by a [`RunConfig`], read from an optional JSON file and
//! overridden by flags. Every run writes `manifest.json` with the resolved
//! configuration into the output directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::{
    alternating_family, benchmark_fast_path, calibrate_power_constant, check_touching_criteria, oracle_us,
    power_beta, power_solution_study, run_multiplicity_experiment, shifted_family, stability_experiment,
    structural_suite, CaseId, SuiteParams, MEMBERSHIP_TOL,
};
use crate::error::{Error, Result};
use crate::grid::{ExteriorData, Grid1D};
use crate::io::{multiplicity_json, write_bench_csv, write_json, write_solution};
use crate::operator::Discretization;
use crate::solver::{
    extremal_solution, solve_linear_dirichlet, solve_regularized, vanishing_viscosity, GradientKind, Method, Side,
    SolverConfig,
};

/// Exit code for solver non-convergence.
pub const EXIT_NONCONVERGENCE: i32 = 2;
/// Exit code for usage errors and failed assertions.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Harmonic,
    Solve,
    Extremal,
    Exponent,
    Multiplicity,
    Stability,
    Check,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// Comparison, strong maximum, L-infinity, barrier and ordering checks.
    Structural,
    /// Structural checks plus every multiplicity example.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// `g_k = g + 1/k`
    Shifted,
    /// `g_k = g (1 + (-1)^k / k)`
    Alternating,
}

/// Named exterior datum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumConfig {
    Constant {
        value: f64,
    },
    Linear {
        slope: f64,
        offset: f64,
    },
    Figure1,
    TwoSolutions,
    FourSolutions,
    /// `c |x|^beta`; `beta` defaults to `(2s + gamma)/(1 + gamma)` and `c`
    /// to the calibrated power-solution constant.
    Power {
        #[serde(default)]
        c: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
    },
    /// Piecewise-linear interpolation of `points`, constant beyond the ends.
    Custom {
        points: Vec<[f64; 2]>,
        growth_m: f64,
        growth_sigma: f64,
    },
}

fn parse_params(name: &str, params: Option<&str>, count: usize) -> std::result::Result<Vec<f64>, String> {
    let Some(p) = params else { return Ok(Vec::new()) };
    let vals: std::result::Result<Vec<f64>, _> = p.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| format!("malformed parameters `{p}` for `{name}`"))?;
    if vals.len() > count {
        return Err(format!("`{name}` takes at most {count} parameters"));
    }
    Ok(vals)
}

impl FromStr for DatumConfig {
    type Err = String;

    /// `name` or `name:p1,p2`, e.g. `constant:2`, `linear:1,0`, `power:0.8,1.25`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s, None),
        };
        let p = |count| parse_params(name, params, count);
        Ok(match name {
            "constant" => DatumConfig::Constant {
                value: p(1)?.first().copied().unwrap_or(1.0),
            },
            "linear" => {
                let v = p(2)?;
                DatumConfig::Linear {
                    slope: v.first().copied().unwrap_or(1.0),
                    offset: v.get(1).copied().unwrap_or(0.0),
                }
            }
            "figure1" => DatumConfig::Figure1,
            "two_solutions" => DatumConfig::TwoSolutions,
            "four_solutions" => DatumConfig::FourSolutions,
            "power" => {
                let v = p(2)?;
                DatumConfig::Power {
                    c: v.first().copied(),
                    beta: v.get(1).copied(),
                }
            }
            other => return Err(format!("unknown datum preset `{other}`")),
        })
    }
}

/// Named right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    Zero,
    Constant { value: f64 },
    /// One value per interior node.
    Table { values: Vec<f64> },
}

impl FromStr for RhsConfig {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.split_once(':') {
            None if s == "zero" => Ok(RhsConfig::Zero),
            Some(("constant", v)) => v
                .trim()
                .parse()
                .map(|value| RhsConfig::Constant { value })
                .map_err(|_| format!("malformed constant `{v}`")),
            _ => Err(format!("unknown right-hand side `{s}` (use zero or constant:<value>)")),
        }
    }
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub gamma: f64,
    pub n: usize,
    pub r_trunc: f64,
    pub r_far: f64,
    pub datum: DatumConfig,
    pub f: RhsConfig,
    /// Fixed regularization for `solve`; vanishing viscosity when absent.
    pub eps: Option<f64>,
    pub side: Side,
    pub case: CaseId,
    pub suite: Suite,
    pub perturbation: Perturbation,
    /// Grid size of the power-constant calibration.
    pub calibration_n: usize,
    /// Random pairs in the comparison suite.
    pub pairs: usize,
    pub seed: u64,
    pub eps_schedule: Vec<f64>,
    pub eta_schedule: Vec<f64>,
    pub damping: f64,
    pub residual_tol: f64,
    pub picard_max: usize,
    pub continuation_tol: f64,
    pub method: Method,
    pub eps_eta_ratio: f64,
    pub gradient: GradientKind,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let solver = SolverConfig::new(1.0);
        RunConfig {
            command: Command::Harmonic,
            a: -1.0,
            b: 1.0,
            s: 0.75,
            gamma: 1.0,
            n: 1000,
            r_trunc: 8.0,
            r_far: 1e4,
            datum: DatumConfig::Figure1,
            f: RhsConfig::Zero,
            eps: None,
            side: Side::Maximal,
            case: CaseId::Figure1,
            suite: Suite::Structural,
            perturbation: Perturbation::Shifted,
            calibration_n: 16000,
            pairs: 100,
            seed: 20240601,
            eps_schedule: solver.eps_schedule,
            eta_schedule: solver.eta_schedule,
            damping: solver.damping,
            residual_tol: solver.residual_tol,
            picard_max: solver.picard_max,
            continuation_tol: solver.continuation_tol,
            method: solver.method,
            eps_eta_ratio: solver.eps_eta_ratio,
            gradient: solver.gradient,
            output_dir: PathBuf::from("fracdeg-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            gamma: self.gamma,
            eps_schedule: self.eps_schedule.clone(),
            eta_schedule: self.eta_schedule.clone(),
            damping: self.damping,
            residual_tol: self.residual_tol,
            picard_max: self.picard_max,
            continuation_tol: self.continuation_tol,
            method: self.method,
            eps_eta_ratio: self.eps_eta_ratio,
            gradient: self.gradient,
        }
    }

    /// Checks every numeric field before any solve.
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::config("s", format!("s must lie in (0,1), got {}", self.s)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::config("a", "need a < b"));
        }
        if self.n < 3 {
            return Err(Error::config("n", "need at least 3 interior nodes"));
        }
        let reach = 2.0 * self.a.abs().max(self.b.abs());
        if !(self.r_trunc >= reach && self.r_trunc.is_finite()) {
            return Err(Error::config(
                "r_trunc",
                format!("r_trunc must be at least 2 max(|a|,|b|) = {reach}"),
            ));
        }
        if !(self.r_far >= self.r_trunc && self.r_far.is_finite()) {
            return Err(Error::config("r_far", "r_far must be at least r_trunc"));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::config("eps", "eps must be positive"));
            }
        }
        if self.calibration_n < 3 {
            return Err(Error::config("calibration_n", "need at least 3 interior nodes"));
        }
        self.solver().validate()?;
        match &self.datum {
            DatumConfig::Custom {
                points,
                growth_m,
                growth_sigma,
            } => {
                if points.len() < 2 || points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::config("datum.points", "need at least two points with increasing x"));
                }
                if points.iter().any(|p| !p[1].is_finite()) {
                    return Err(Error::config("datum.points", "values must be finite"));
                }
                if !(*growth_m >= 0.0) {
                    return Err(Error::config("datum.growth_m", "growth constant must be nonnegative"));
                }
                self.check_sigma(*growth_sigma)?;
            }
            DatumConfig::Power { beta: Some(beta), .. } => self.check_sigma(*beta)?,
            _ => {}
        }
        if let RhsConfig::Table { values } = &self.f {
            if values.len() != self.n {
                return Err(Error::config(
                    "f.values",
                    format!("table has {} entries, expected n = {}", values.len(), self.n),
                ));
            }
        }
        Ok(())
    }

    fn check_sigma(&self, sigma: f64) -> Result<()> {
        if sigma > 0.0 && sigma < 2.0 * self.s {
            Ok(())
        } else {
            Err(Error::config(
                "datum.growth_sigma",
                format!(
                    "growth exponent sigma = {sigma} must lie in (0, 2s) = (0, {}) for the exterior tail to converge",
                    2.0 * self.s
                ),
            ))
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.a, self.b, self.n, self.r_trunc)
    }

    fn calibration_grid(&self) -> Result<Grid1D> {
        Grid1D::new(-1.0, 1.0, self.calibration_n, self.r_trunc.max(2.0))
    }

    /// Builds the exterior datum; power data without a constant are calibrated.
    pub fn exterior_data(&self) -> Result<ExteriorData> {
        Ok(match &self.datum {
            DatumConfig::Constant { value } => ExteriorData::constant(*value),
            DatumConfig::Linear { slope, offset } => ExteriorData::linear(*slope, *offset),
            DatumConfig::Figure1 => ExteriorData::figure1(self.s),
            DatumConfig::TwoSolutions => ExteriorData::two_solutions(),
            DatumConfig::FourSolutions => ExteriorData::four_solutions(),
            DatumConfig::Power { c, beta } => {
                let beta = beta.unwrap_or_else(|| power_beta(self.s, self.gamma));
                let c = match c {
                    Some(c) => *c,
                    None => {
                        calibrate_power_constant(self.gamma, self.s, &self.calibration_grid()?, self.r_far)?.constant
                    }
                };
                ExteriorData::power(c, beta)?
            }
            DatumConfig::Custom {
                points,
                growth_m,
                growth_sigma,
            } => {
                let pts = points.clone();
                ExteriorData::new("custom", *growth_m, *growth_sigma, move |x| interpolate(&pts, x))?
            }
        })
    }

    pub fn rhs(&self) -> Vec<f64> {
        match &self.f {
            RhsConfig::Zero => vec![0.0; self.n],
            RhsConfig::Constant { value } => vec![*value; self.n],
            RhsConfig::Table { values } => values.clone(),
        }
    }
}

fn interpolate(points: &[[f64; 2]], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first[0] {
        return first[1];
    }
    if x >= last[0] {
        return last[1];
    }
    let k = points.partition_point(|p| p[0] <= x);
    let (p, q) = (points[k - 1], points[k]);
    p[1] + (q[1] - p[1]) * (x - p[0]) / (q[0] - p[0])
}

#[derive(Debug, Parser)]
#[command(name = "fracdeg", version, about = "Degenerate fractional Dirichlet problems on an interval")]
pub struct Cli {
    /// JSON file with a full or partial run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Linear solve `Delta^s u = f` with exterior datum.
    Harmonic(CommonArgs),
    /// Degenerate solve by vanishing viscosity, or one regularized solve with --eps.
    Solve(CommonArgs),
    /// Maximal or minimal solution of the homogeneous problem.
    Extremal(CommonArgs),
    /// Power-solution reproduction and gradient-Hölder exponent fit.
    Exponent(CommonArgs),
    /// One of the multiplicity examples.
    Multiplicity(CommonArgs),
    /// Stability of maximal solutions under perturbed data.
    Stability(CommonArgs),
    /// Property suites.
    Check(CommonArgs),
    /// Direct versus FFT operator timing.
    Bench(CommonArgs),
}

/// Flags shared by every command; each overrides the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Fractional order, in (0,1) [default: 0.75]
    #[arg(long)]
    pub s: Option<f64>,
    /// Degeneracy exponent [default: 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Interior nodes [default: 1000]
    #[arg(long)]
    pub n: Option<usize>,
    /// Left endpoint [default: -1]
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Right endpoint [default: 1]
    #[arg(long)]
    pub b: Option<f64>,
    /// Exterior lattice radius [default: 8]
    #[arg(long)]
    pub r_trunc: Option<f64>,
    /// End of the numeric tail segment [default: 1e4]
    #[arg(long)]
    pub r_far: Option<f64>,
    /// constant[:c], linear[:a,b], figure1, two_solutions, four_solutions, power[:C,beta] [default: figure1]
    #[arg(long)]
    pub datum: Option<DatumConfig>,
    /// zero or constant:<value> [default: zero]
    #[arg(long)]
    pub f: Option<RhsConfig>,
    /// Fixed regularization for `solve`
    #[arg(long)]
    pub eps: Option<f64>,
    /// Extremal side [default: maximal]
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    /// Multiplicity example: figure1, two_solutions, four_solutions, linear_unique [default: figure1]
    #[arg(long = "case")]
    pub case_id: Option<String>,
    /// Property suite [default: structural]
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Perturbation family for `stability` [default: shifted]
    #[arg(long, value_enum)]
    pub perturbation: Option<Perturbation>,
    /// Grid size of the power-constant calibration [default: 16000]
    #[arg(long)]
    pub calibration_n: Option<usize>,
    /// Random data pairs in the comparison suite [default: 100]
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Seed of every random choice [default: 20240601]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Solver method [default: newton]
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Discrete gradient [default: upwind]
    #[arg(long, value_enum)]
    pub gradient: Option<GradientArg>,
    /// Stage residual tolerance [default: 1e-9]
    #[arg(long)]
    pub residual_tol: Option<f64>,
    /// Continuation tolerance [default: 1e-4]
    #[arg(long)]
    pub continuation_tol: Option<f64>,
    /// Output directory [default: fracdeg-out]
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SideArg {
    Maximal,
    Minimal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Newton,
    Picard,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GradientArg {
    Upwind,
    Central,
}

impl Cli {
    /// Resolves the configuration: defaults, then the file, then flags.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        let (command, args) = match &self.command {
            CommandArgs::Harmonic(a) => (Command::Harmonic, a),
            CommandArgs::Solve(a) => (Command::Solve, a),
            CommandArgs::Extremal(a) => (Command::Extremal, a),
            CommandArgs::Exponent(a) => (Command::Exponent, a),
            CommandArgs::Multiplicity(a) => (Command::Multiplicity, a),
            CommandArgs::Stability(a) => (Command::Stability, a),
            CommandArgs::Check(a) => (Command::Check, a),
            CommandArgs::Bench(a) => (Command::Bench, a),
        };
        cfg.command = command;
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = args.$field.clone() { cfg.$field = v; } )* };
        }
        set!(s, gamma, n, a, b, r_trunc, r_far, datum, f, suite, perturbation, calibration_n, pairs, seed);
        set!(residual_tol, continuation_tol, output_dir);
        if let Some(e) = args.eps {
            cfg.eps = Some(e);
        }
        if let Some(side) = args.side {
            cfg.side = match side {
                SideArg::Maximal => Side::Maximal,
                SideArg::Minimal => Side::Minimal,
            };
        }
        if let Some(c) = &args.case_id {
            cfg.case = c.parse().map_err(|_| Error::config("case", format!("unknown case `{c}`")))?;
            cfg.datum = match cfg.case {
                CaseId::Figure1 => DatumConfig::Figure1,
                CaseId::TwoSolutions => DatumConfig::TwoSolutions,
                CaseId::FourSolutions => DatumConfig::FourSolutions,
                CaseId::LinearUnique => DatumConfig::Linear { slope: 1.0, offset: 0.0 },
            };
        }
        if let Some(m) = args.method {
            cfg.method = match m {
                MethodArg::Newton => Method::Newton,
                MethodArg::Picard => Method::Picard,
            };
        }
        if let Some(g) = args.gradient {
            cfg.gradient = match g {
                GradientArg::Upwind => GradientKind::Upwind,
                GradientArg::Central => GradientKind::Central,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Result of a pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub passed: bool,
    pub converged: bool,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<(String, bool, f64)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            converged: true,
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, value: f64) {
        self.passed &= pass;
        self.checks.push((name.to_string(), pass, value));
    }

    pub fn exit_code(&self) -> i32 {
        if !self.converged {
            EXIT_NONCONVERGENCE
        } else if !self.passed {
            EXIT_FAILURE
        } else {
            0
        }
    }
}

/// Maps an error to the process exit code.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_FAILURE,
    }
}

/// Runs the pipeline named by `cfg.command` and writes the manifest.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let start = Instant::now();
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut out = Outcome::new();
    match cfg.command {
        Command::Harmonic => run_harmonic(cfg, &dir, &mut out)?,
        Command::Solve => run_solve(cfg, &dir, &mut out)?,
        Command::Extremal => run_extremal(cfg, &dir, &mut out)?,
        Command::Exponent => run_exponent(cfg, &dir, &mut out)?,
        Command::Multiplicity => run_multiplicity(cfg, cfg.case, &dir, &mut out)?,
        Command::Stability => run_stability(cfg, &dir, &mut out)?,
        Command::Check => run_check(cfg, &dir, &mut out)?,
        Command::Bench => run_bench(cfg, &dir, &mut out)?,
    }
    let manifest = json!({
        "program": "fracdeg",
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "outputs": out.outputs,
        "checks": out.checks,
        "passed": out.passed,
        "converged": out.converged,
        "elapsed_seconds": start.elapsed().as_secs_f64(),
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(out)
}

fn discretization(cfg: &RunConfig) -> Result<Discretization> {
    Discretization::new(cfg.grid()?, cfg.s, cfg.r_far, cfg.exterior_data()?)
}

fn run_harmonic(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let disc = discretization(cfg)?;
    let f = cfg.rhs();
    let sol = solve_linear_dirichlet(&disc, &f)?;
    out.outputs.push(write_solution(dir, "harmonic", &sol, cfg.s)?);
    let scale = 1.0 + f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    out.check("linear_residual", sol.residual_sup <= 1e-6 * scale, sol.residual_sup);
    if matches!(cfg.datum, DatumConfig::Figure1) && cfg.a == -1.0 && cfg.b == 1.0 {
        let grid = disc.grid();
        let err = grid
            .interior()
            .map(|j| (sol.u.values()[j] - oracle_us(cfg.s, grid.x(j))).abs())
            .fold(0.0, f64::max);
        out.check("distance_to_us", err <= 1e-2, err);
    }
    Ok(())
}

fn run_solve(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let disc = discretization(cfg)?;
    let solver = cfg.solver();
    let f = cfg.rhs();
    let sol = match cfg.eps {
        Some(eps) => solve_regularized(&disc, &solver, eps, &f, None)?,
        None => vanishing_viscosity(&disc, &solver, &f, None)?,
    };
    out.converged &= sol.converged;
    out.outputs.push(write_solution(dir, "solution", &sol, cfg.s)?);
    out.check("converged", sol.converged, sol.residual_sup);
    Ok(())
}

fn run_extremal(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let disc = discretization(cfg)?;
    let sol = extremal_solution(&disc, &cfg.solver(), cfg.side, None)?;
    out.converged &= sol.converged;
    let stem = match cfg.side {
        Side::Maximal => "maximal",
        Side::Minimal => "minimal",
    };
    out.outputs.push(write_solution(dir, stem, &sol, cfg.s)?);
    out.check("converged", sol.converged, sol.continuation_steps.last().copied().unwrap_or(f64::NAN));
    out.check("residual", sol.residual_sup <= MEMBERSHIP_TOL, sol.residual_sup);
    out.check("monotone_continuation", sol.monotonicity_violation <= 10.0 * cfg.residual_tol.max(1e-12), sol.monotonicity_violation);
    Ok(())
}

fn run_exponent(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let study = power_solution_study(cfg.s, &cfg.solver(), &cfg.grid()?, &cfg.calibration_grid()?, cfg.r_far)?;
    out.converged &= study.converged;
    if let Some(sol) = &study.solution {
        out.outputs.push(write_solution(dir, "power_solution", sol, cfg.s)?);
    }
    let path = dir.join("exponent_report.json");
    write_json(&path, &study)?;
    out.outputs.push(path);
    out.check("power_profile", study.relative_error <= 1e-2, study.relative_error);
    out.check("exponent", study.alpha_relative_error <= 0.05, study.fit.alpha_hat);
    Ok(())
}

fn run_multiplicity(cfg: &RunConfig, case: CaseId, dir: &Path, out: &mut Outcome) -> Result<()> {
    let report = run_multiplicity_experiment(case, cfg.s, cfg.gamma, &cfg.grid()?, &cfg.solver(), cfg.r_far)?;
    let mut files = Vec::new();
    for c in &report.candidates {
        out.converged &= c.solution.converged;
        let stem = format!("{}_{}", case.name(), c.label);
        let path = write_solution(dir, &stem, &c.solution, cfg.s)?;
        files.push(format!("{stem}.csv"));
        out.outputs.push(path);
    }
    let touching = check_touching_criteria(&report);
    let mut value = multiplicity_json(&report, &files);
    value["touching"] = serde_json::to_value(&touching)?;
    let path = dir.join(format!("{}_report.json", case.name()));
    write_json(&path, &value)?;
    out.outputs.push(path);
    for a in &report.assertions {
        out.check(&format!("{}:{}", case.name(), a.name), a.pass, a.margin);
    }
    out.check(&format!("{}:touching", case.name()), touching.pass, touching.touch_tol);
    Ok(())
}

fn run_stability(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let g = cfg.exterior_data()?;
    let ks = [1, 2, 4, 8, 16];
    let family = match cfg.perturbation {
        Perturbation::Shifted => shifted_family(&g, &ks),
        Perturbation::Alternating => alternating_family(&g, &ks),
    };
    let report = stability_experiment(&g, &family, cfg.s, &cfg.grid()?, &cfg.solver(), cfg.r_far)?;
    let path = dir.join("stability_report.json");
    write_json(&path, &report)?;
    out.outputs.push(path);
    out.check("distances_decreasing", report.decreasing, report.final_distance);
    out.check("final_distance", report.final_distance <= report.tolerance, report.final_distance);
    Ok(())
}

fn run_check(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let params = SuiteParams {
        n: cfg.n.min(400),
        pairs: cfg.pairs,
        seed: cfg.seed,
        s: cfg.s,
        gamma: cfg.gamma,
        ..SuiteParams::default()
    };
    let report = structural_suite(&params, &cfg.solver())?;
    let path = dir.join("structural_report.json");
    write_json(&path, &report)?;
    out.outputs.push(path);
    for item in [&report.comparison, &report.strong_max, &report.linf, &report.ordering] {
        out.check(&item.name, item.pass(), item.worst_margin);
    }
    for b in &report.barrier {
        out.check(&format!("barrier s={}", b.s), b.pass, b.max_value);
    }
    if cfg.suite == Suite::All {
        for case in CaseId::ALL {
            run_multiplicity(cfg, case, dir, out)?;
        }
    }
    Ok(())
}

fn run_bench(cfg: &RunConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let row = benchmark_fast_path(cfg.n, cfg.s, cfg.seed, 3)?;
    let path = dir.join("bench.csv");
    write_bench_csv(&path, std::slice::from_ref(&row))?;
    println!("n,s,direct_seconds,fast_seconds,max_rel_diff");
    println!(
        "{},{},{:.6e},{:.6e},{:.3e}",
        row.n, row.s, row.direct_seconds, row.fast_seconds, row.max_rel_diff
    );
    out.outputs.push(path);
    out.check("fast_path_agreement", row.max_rel_diff <= 1e-12, row.max_rel_diff);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        Cli::try_parse_from(args).map_err(|e| Error::invalid(e.to_string()))?.resolve()
    }

    #[test]
    fn multiplicity_flags() {
        let cfg = parse(&["fracdeg", "multiplicity", "--case", "figure1", "--s", "0.75", "--gamma", "1", "--n", "2000"])
            .unwrap();
        assert_eq!(cfg.command, Command::Multiplicity);
        assert_eq!(cfg.case, CaseId::Figure1);
        assert_eq!(cfg.datum, DatumConfig::Figure1);
        assert_eq!(cfg.n, 2000);
    }

    #[test]
    fn rejects_order_outside_unit_interval() {
        let err = RunConfig::from_json_str(r#"{"command": "harmonic", "s": 1.2}"#)
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(err.to_string().contains("s must lie in (0,1)"));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_json_str(r#"{"command": "harmonic", "bogus": 1}"#).is_err());
    }

    #[test]
    fn rejects_fast_growing_custom_datum() {
        let text = r#"{"s": 0.5, "datum": {"preset": "custom", "points": [[0, 0], [1, 1]], "growth_m": 1, "growth_sigma": 1.0}}"#;
        let err = RunConfig::from_json_str(text).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("growth exponent sigma"));
    }

    #[test]
    fn datum_strings() {
        assert_eq!("constant:2".parse::<DatumConfig>().unwrap(), DatumConfig::Constant { value: 2.0 });
        assert_eq!(
            "linear:1,0.5".parse::<DatumConfig>().unwrap(),
            DatumConfig::Linear { slope: 1.0, offset: 0.5 }
        );
        assert!("cubic".parse::<DatumConfig>().is_err());
        assert_eq!("constant:1".parse::<RhsConfig>().unwrap(), RhsConfig::Constant { value: 1.0 });
    }

    #[test]
    fn interpolation_is_piecewise_linear() {
        let pts = [[-1.0, 0.0], [0.0, 2.0], [2.0, 0.0]];
        assert_eq!(interpolate(&pts, -3.0), 0.0);
        assert_eq!(interpolate(&pts, -0.5), 1.0);
        assert_eq!(interpolate(&pts, 1.0), 1.0);
        assert_eq!(interpolate(&pts, 5.0), 0.0);
    }
}
