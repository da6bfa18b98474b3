//! Trial runner and phase-transition sweeps.
//!
//! A *trial* generates one seeded instance, runs a solver on it and compares
//! the estimate against the truth over the whole matrix. A *phase point*
//! scans a grid of difficulty values upward (error rate, or erasure rate)
//! and reports the largest value at which every trial succeeded, stopping at
//! the first value with a failure. A *sweep* evaluates phase points along an
//! x-axis (density or matrix size) for each solver.
//!
//! Trial seeds are the first eight bytes (little endian) of
//! `SHA-256("sgmc-trial-v1" ‖ seed_base ‖ n ‖ rank ‖ bits(density) ‖ trial)`,
//! every integer encoded as u64 little endian. The error rate is left out,
//! so an error-rate scan reuses the same truth and mask at every grid value.

mod emit;

pub use emit::{read_csv, write_csv, write_svg, CsvRowWriter, PlotFormat};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::alm;
use crate::error::{Error, Result};
use crate::sgmca::{self, GreedyConfig};
use crate::numkit::DenseMatrix;
use crate::synthgen::{self, ErrorModel, Instance, InstanceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solver {
    /// A single ALM solve.
    #[serde(rename = "alm")]
    AlmOnly,
    #[serde(rename = "sgmca")]
    Sgmca,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::AlmOnly => "alm",
            Solver::Sgmca => "sgmca",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alm" | "alm_only" => Ok(Solver::AlmOnly),
            "sgmca" => Ok(Solver::Sgmca),
            other => Err(Error::arg(format!("unknown solver {other:?} (expected alm or sgmca)"))),
        }
    }
}

pub const DEFAULT_SUCCESS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub instance: InstanceSpec,
    pub solver: Solver,
    /// Plain ALM runs use `greedy.inner`.
    pub greedy: GreedyConfig,
    pub success_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub success: bool,
    /// `‖A − Â‖_F / ‖A‖_F` over all entries; infinite when the solver failed.
    pub rel_error: f64,
    pub outer_iters: usize,
    pub total_svds: usize,
    pub wall_time: f64,
    pub final_density: f64,
    pub pruned_clean: usize,
    pub pruned_corrupt: usize,
    pub failure: Option<String>,
}

pub fn run_trial(spec: &TrialSpec) -> Result<TrialResult> {
    let inst = synthgen::generate(&spec.instance)?;
    evaluate(&inst, spec.solver, &spec.greedy, spec.success_tol).map(|(result, _)| result)
}

/// Runs `solver` on an existing instance and scores it against the truth.
/// Also returns the estimate, unless the solver failed numerically.
pub fn evaluate(
    inst: &Instance,
    solver: Solver,
    greedy: &GreedyConfig,
    success_tol: f64,
) -> Result<(TrialResult, Option<DenseMatrix>)> {
    if !(success_tol > 0.0) {
        return Err(Error::arg(format!("success_tol must be positive, got {success_tol}")));
    }
    greedy.validate()?;
    let start = Instant::now();
    let root = inst.observed.mask();

    let outcome = match solver {
        Solver::AlmOnly => alm::solve(&inst.observed, &greedy.inner)
            .map(|sol| (sol.a, 1, sol.report.svd_count, root.clone())),
        Solver::Sgmca => sgmca::solve(&inst.observed, greedy).map(|out| {
            let svds = out.total_svds();
            (out.a, out.trace.len(), svds, out.omega_final)
        }),
    };
    let wall_time = start.elapsed().as_secs_f64();

    let (estimate, outer_iters, total_svds, omega) = match outcome {
        Ok(v) => v,
        Err(e) if e.is_numeric() => {
            log::debug!("trial seed {} failed: {e}", inst.spec.seed);
            let failed = TrialResult {
                success: false,
                rel_error: f64::INFINITY,
                outer_iters: 0,
                total_svds: 0,
                wall_time,
                final_density: root.density(),
                pruned_clean: 0,
                pruned_corrupt: 0,
                failure: Some(e.to_string()),
            };
            return Ok((failed, None));
        }
        Err(e) => return Err(e),
    };

    let rel_error = estimate.sub(&inst.truth)?.frobenius_norm() / inst.truth.frobenius_norm();
    let (mut pruned_clean, mut pruned_corrupt) = (0, 0);
    for idx in root.iter().filter(|&idx| !omega.contains(idx)) {
        if inst.corruption_support.binary_search(&idx).is_ok() {
            pruned_corrupt += 1;
        } else {
            pruned_clean += 1;
        }
    }
    let result = TrialResult {
        success: rel_error < success_tol,
        rel_error,
        outer_iters,
        total_svds,
        wall_time,
        final_density: omega.density(),
        pruned_clean,
        pruned_corrupt,
        failure: None,
    };
    Ok((result, Some(estimate)))
}

/// How `λ` is chosen for each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaPolicy {
    Fixed(f64),
    Rule(LambdaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// `1/√n`.
    InvSqrtN,
}

impl Default for LambdaPolicy {
    fn default() -> Self {
        LambdaPolicy::Rule(LambdaRule::InvSqrtN)
    }
}

impl LambdaPolicy {
    pub fn resolve(&self, n: usize) -> f64 {
        match *self {
            LambdaPolicy::Fixed(v) => v,
            LambdaPolicy::Rule(LambdaRule::InvSqrtN) => 1.0 / (n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    Density,
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// Fraction of observed entries that are corrupted.
    ErrorRate,
    /// `1 − d(Ω)`.
    ErasureRate,
}

impl fmt::Display for XAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            XAxis::Density => "density",
            XAxis::N => "n",
        })
    }
}

impl fmt::Display for ScanAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScanAxis::ErrorRate => "error_rate",
            ScanAxis::ErasureRate => "erasure_rate",
        })
    }
}

fn default_trials() -> usize {
    10
}

fn default_success_tol() -> f64 {
    DEFAULT_SUCCESS_TOL
}

fn default_model() -> ErrorModel {
    ErrorModel::AdditiveGaussian
}

fn default_true() -> bool {
    true
}

/// A phase-transition experiment.
///
/// * `x_axis = "density"`: one size, one curve point per entry of
///   `densities`, scanning the error rate.
/// * `x_axis = "n"` with `scan = "error_rate"`: one point per size at the
///   single fixed density in `densities`.
/// * `x_axis = "n"` with `scan = "erasure_rate"`: one point per size at the
///   fixed `error_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub rank: usize,
    pub sizes: Vec<usize>,
    pub x_axis: XAxis,
    #[serde(default)]
    pub densities: Vec<f64>,
    pub scan: ScanAxis,
    /// Scanned values, strictly increasing.
    pub grid: Vec<f64>,
    #[serde(default)]
    pub error_rate: f64,
    #[serde(default = "default_model")]
    pub error_model: ErrorModel,
    #[serde(default = "default_true")]
    pub additive: bool,
    #[serde(default = "default_trials")]
    pub trials_per_point: usize,
    pub solvers: Vec<Solver>,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_success_tol")]
    pub success_tol: f64,
    /// Overrides `greedy.inner.lambda` at every point.
    #[serde(default)]
    pub lambda: LambdaPolicy,
    #[serde(default)]
    pub greedy: GreedyConfig,
}

/// One x-axis position of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub n: usize,
    pub x: f64,
    /// Fixed density (error-rate scans).
    pub density: Option<f64>,
    /// Fixed error rate (erasure-rate scans).
    pub error_rate: Option<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::format("sweep config", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::arg("sweep needs at least one solver"));
        }
        if self.trials_per_point == 0 {
            return Err(Error::arg("trials_per_point must be at least 1"));
        }
        if self.grid.is_empty() || !strictly_increasing(&self.grid) {
            return Err(Error::arg("scan grid must be non-empty and strictly increasing"));
        }
        if self.grid.iter().any(|g| !(0.0..1.0).contains(g)) {
            return Err(Error::arg("scan grid values must lie in [0, 1)"));
        }
        if !(self.success_tol > 0.0) {
            return Err(Error::arg("success_tol must be positive"));
        }
        if let LambdaPolicy::Fixed(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::arg(format!("lambda must be positive, got {l}")));
            }
        }
        if self.sizes.is_empty() || !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::arg("sizes must be non-empty and strictly increasing"));
        }
        if self.sizes.iter().any(|&n| self.rank == 0 || self.rank >= n) {
            return Err(Error::arg("rank must satisfy 0 < rank < n for every size"));
        }
        if self.densities.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
            return Err(Error::arg("densities must lie in (0, 1]"));
        }
        match (self.x_axis, self.scan) {
            (XAxis::Density, ScanAxis::ErrorRate) => {
                if self.sizes.len() != 1 {
                    return Err(Error::arg("a density sweep takes exactly one size"));
                }
                if self.densities.is_empty() || !strictly_increasing(&self.densities) {
                    return Err(Error::arg("densities must be non-empty and strictly increasing"));
                }
            }
            (XAxis::Density, ScanAxis::ErasureRate) => {
                return Err(Error::arg("an erasure-rate scan cannot use density as its x-axis"));
            }
            (XAxis::N, ScanAxis::ErrorRate) => {
                if self.densities.len() != 1 {
                    return Err(Error::arg("a size sweep over error rates takes exactly one density"));
                }
            }
            (XAxis::N, ScanAxis::ErasureRate) => {
                if !(0.0..1.0).contains(&self.error_rate) {
                    return Err(Error::arg("error_rate must lie in [0, 1)"));
                }
            }
        }
        self.greedy.validate()
    }

    pub fn points(&self) -> Vec<SweepPoint> {
        match (self.x_axis, self.scan) {
            (XAxis::Density, _) => self
                .densities
                .iter()
                .map(|&d| SweepPoint {
                    n: self.sizes[0],
                    x: d,
                    density: Some(d),
                    error_rate: None,
                })
                .collect(),
            (XAxis::N, ScanAxis::ErrorRate) => self
                .sizes
                .iter()
                .map(|&n| SweepPoint {
                    n,
                    x: n as f64,
                    density: Some(self.densities[0]),
                    error_rate: None,
                })
                .collect(),
            (XAxis::N, ScanAxis::ErasureRate) => self
                .sizes
                .iter()
                .map(|&n| SweepPoint {
                    n,
                    x: n as f64,
                    density: None,
                    error_rate: Some(self.error_rate),
                })
                .collect(),
        }
    }

    fn greedy_for(&self, n: usize) -> GreedyConfig {
        let mut g = self.greedy.clone();
        g.inner.lambda = self.lambda.resolve(n);
        g
    }

    /// The trial spec for trial `t` at scan value `g` of `point`.
    pub fn trial_spec(&self, point: &SweepPoint, solver: Solver, g: f64, t: usize) -> TrialSpec {
        let (density, error_rate) = match self.scan {
            ScanAxis::ErrorRate => (point.density.expect("error-rate scans fix the density"), g),
            ScanAxis::ErasureRate => (1.0 - g, point.error_rate.expect("erasure scans fix the error rate")),
        };
        TrialSpec {
            instance: InstanceSpec {
                n: point.n,
                rank: self.rank,
                density,
                error_rate,
                error_model: self.error_model,
                additive: self.additive,
                seed: trial_seed(self.seed_base, point.n, self.rank, density, t),
            },
            solver,
            greedy: self.greedy_for(point.n),
            success_tol: self.success_tol,
        }
    }
}

pub fn trial_seed(seed_base: u64, n: usize, rank: usize, density: f64, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"sgmc-trial-v1");
    h.update(seed_base.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update((rank as u64).to_le_bytes());
    h.update(density.to_bits().to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Result of a phase-point scan: a grid member, or below the grid when even
/// the easiest value failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseValue {
    Admissible(f64),
    BelowGrid,
}

impl PhaseValue {
    pub fn value(&self) -> Option<f64> {
        match *self {
            PhaseValue::Admissible(v) => Some(v),
            PhaseValue::BelowGrid => None,
        }
    }
}

impl fmt::Display for PhaseValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseValue::Admissible(v) => write!(f, "{v}"),
            PhaseValue::BelowGrid => f.write_str("below_grid"),
        }
    }
}

impl FromStr for PhaseValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "below_grid" {
            return Ok(PhaseValue::BelowGrid);
        }
        s.parse()
            .map(PhaseValue::Admissible)
            .map_err(|e| Error::format("phase value", format!("{s:?}: {e}")))
    }
}

impl Serialize for PhaseValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhaseValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Trials evaluated at one grid value.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEval {
    pub value: f64,
    pub results: Vec<TrialResult>,
}

impl GridEval {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.success).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub value: PhaseValue,
    pub trials: usize,
    /// Failures at the first failing grid value; 0 if the whole grid passed.
    pub failures: usize,
    pub evaluations: Vec<GridEval>,
}

/// Scans `spec.grid` upward at `point`, stopping at the first grid value with
/// a failed trial.
pub fn phase_point(spec: &SweepSpec, point: &SweepPoint, solver: Solver) -> Result<PhasePoint> {
    spec.validate()?;
    let mut value = PhaseValue::BelowGrid;
    let mut evaluations = Vec::new();
    let mut failures = 0;
    for &g in &spec.grid {
        let results = (0..spec.trials_per_point)
            .into_par_iter()
            .map(|t| run_trial(&spec.trial_spec(point, solver, g, t)))
            .collect::<Result<Vec<_>>>()?;
        let eval = GridEval { value: g, results };
        let failed = eval.failures();
        log::info!(
            "{solver} n={} x={} {}={g}: {}/{} failed",
            point.n,
            point.x,
            spec.scan,
            failed,
            spec.trials_per_point
        );
        evaluations.push(eval);
        if failed > 0 {
            failures = failed;
            break;
        }
        value = PhaseValue::Admissible(g);
    }
    Ok(PhasePoint {
        value,
        trials: spec.trials_per_point,
        failures,
        evaluations,
    })
}

/// One emitted curve point. Serialized as one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub solver: Solver,
    pub x_axis: XAxis,
    pub x: f64,
    pub y_axis: ScanAxis,
    pub y: PhaseValue,
    pub n: usize,
    pub rank: usize,
    /// Fixed density, empty for erasure scans.
    pub density: Option<f64>,
    /// Fixed error rate, empty for error-rate scans.
    pub error_rate: Option<f64>,
    pub lambda: f64,
    pub trials: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveTable {
    pub rows: Vec<CurveRow>,
}

impl CurveTable {
    pub fn solvers(&self) -> Vec<Solver> {
        let mut out: Vec<Solver> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.solver) {
                out.push(r.solver);
            }
        }
        out
    }

    /// `(x, y)` pairs of one solver, in sweep order.
    pub fn curve(&self, solver: Solver) -> Vec<(f64, PhaseValue)> {
        self.rows.iter().filter(|r| r.solver == solver).map(|r| (r.x, r.y)).collect()
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<CurveTable> {
    let mut table = CurveTable::default();
    sweep_with(spec, |row| {
        table.rows.push(row.clone());
        Ok(())
    })?;
    Ok(table)
}

/// Runs the sweep, handing each row to `sink` as soon as it is known. Rows
/// come in x order, solvers in the order listed for each x.
pub fn sweep_with(spec: &SweepSpec, mut sink: impl FnMut(&CurveRow) -> Result<()>) -> Result<()> {
    spec.validate()?;
    for point in spec.points() {
        for &solver in &spec.solvers {
            let pp = phase_point(spec, &point, solver)?;
            sink(&CurveRow {
                solver,
                x_axis: spec.x_axis,
                x: point.x,
                y_axis: spec.scan,
                y: pp.value,
                n: point.n,
                rank: spec.rank,
                density: point.density,
                error_rate: point.error_rate,
                lambda: spec.lambda.resolve(point.n),
                trials: pp.trials,
                failures: pp.failures,
            })?;
        }
    }
    Ok(())
}
