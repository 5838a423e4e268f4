//! The Monte Carlo study: generate scenarios from a known model, predict each
//! scenario's target with every method, score, and aggregate.
//!
//! Scenario `i` is generated from stream `(seed, 0, i)`; method `k` predicts
//! it from `(seed, 1, i, k)` and is scored from `(seed, 2, i, k)`, where `k`
//! is the method's fixed [`Method::id`]. Aggregation walks scenarios in index
//! order, so reports are byte-identical for any thread count.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainladder::{ResidualAdjustment, VariancePower};
use crate::models::{fit, generate_scenario, ModelKind, ModelParams, ParametricPredictor, ScenarioTruth};
use crate::resampling::{
    bootstrap_predict, unifnorm_predict, uniform_predict, BootstrapConfig, Diagnostics, Prediction, UnifnormVariance,
};
use crate::rng::{stream, StreamRng};
use crate::scoring::{
    pit_histogram, pp_below, pp_curve_from_indicators, score_scenario, uniform_grid, HistogramBin, PpPoint,
    PredictiveSample, ScenarioScore, ScoringOptions,
};
use crate::triangle::{Target, Triangle};

const SCENARIO_TAG: u64 = 0;
const PREDICT_TAG: u64 = 1;
const SCORE_TAG: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(alias = "lognormal")]
    LogNormal,
    #[serde(alias = "negbinomial", alias = "negative_binomial", alias = "negbin")]
    NegBinomial,
    Poisson,
    Odp,
    Gamma,
    Uniform,
    Unifnorm,
    BootstrapGamma,
    BootstrapOdp,
    Ideal,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::LogNormal,
        Method::NegBinomial,
        Method::Poisson,
        Method::Odp,
        Method::Gamma,
        Method::Uniform,
        Method::Unifnorm,
        Method::BootstrapGamma,
        Method::BootstrapOdp,
        Method::Ideal,
    ];

    /// Stable stream index; never reuse or renumber.
    pub fn id(self) -> u64 {
        match self {
            Method::LogNormal => 1,
            Method::NegBinomial => 2,
            Method::Poisson => 3,
            Method::Odp => 4,
            Method::Gamma => 5,
            Method::Uniform => 6,
            Method::Unifnorm => 7,
            Method::BootstrapGamma => 8,
            Method::BootstrapOdp => 9,
            Method::Ideal => 10,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::LogNormal => "log_normal",
            Method::NegBinomial => "neg_binomial",
            Method::Poisson => "poisson",
            Method::Odp => "odp",
            Method::Gamma => "gamma",
            Method::Uniform => "uniform",
            Method::Unifnorm => "unifnorm",
            Method::BootstrapGamma => "bootstrap_gamma",
            Method::BootstrapOdp => "bootstrap_odp",
            Method::Ideal => "ideal",
        }
    }

    pub fn model_kind(self) -> Option<ModelKind> {
        match self {
            Method::LogNormal => Some(ModelKind::LogNormal),
            Method::NegBinomial => Some(ModelKind::NegBinomial),
            Method::Poisson => Some(ModelKind::Poisson),
            Method::Odp => Some(ModelKind::Odp),
            Method::Gamma => Some(ModelKind::Gamma),
            _ => None,
        }
    }

    /// Methods that estimate a dispersion and need `n >= 3`.
    fn needs_dispersion(self) -> bool {
        matches!(self, Method::Odp | Method::Gamma | Method::BootstrapGamma | Method::BootstrapOdp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        serde_json::from_value(serde_json::Value::String(key)).map_err(|_| {
            let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method {s:?} (expected one of {})", names.join(", "))
        })
    }
}

/// When the PIT spreads ties uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PitMode {
    /// Randomize for integer-valued methods only.
    #[default]
    Auto,
    Always,
    Never,
}

/// Named sizes for `N` and `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `N = 2000`, `M = 5000`.
    Paper,
    /// `N = 200`, `M = 1000`.
    Desk,
}

impl Preset {
    pub fn sizes(self) -> (usize, usize) {
        match self {
            Preset::Paper => (2000, 5000),
            Preset::Desk => (200, 1000),
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(format!("unknown preset {s:?} (expected paper or desk)")),
        }
    }
}

fn default_n() -> usize {
    2000
}
fn default_m() -> usize {
    5000
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_beta() -> f64 {
    0.5
}
fn default_levels() -> Vec<f64> {
    vec![0.6667, 0.9]
}
fn default_bins() -> usize {
    20
}
fn default_pp_points() -> usize {
    100
}
fn default_failure_fraction() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub generator: ModelParams,
    #[serde(default = "default_n")]
    pub n_scenarios: usize,
    #[serde(default = "default_m")]
    pub m_draws: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_beta")]
    pub energy_beta: f64,
    #[serde(default = "default_levels")]
    pub intervals: Vec<f64>,
    #[serde(default = "default_bins")]
    pub pit_bins: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub target: Target,
    #[serde(default)]
    pub residual_adjustment: ResidualAdjustment,
    #[serde(default)]
    pub unifnorm_variance: UnifnormVariance,
    #[serde(default)]
    pub pit_mode: PitMode,
    /// Sampled pairs for the energy score; `None` picks by sample size.
    #[serde(default)]
    pub energy_pairs: Option<usize>,
    /// P-P curve evaluated at `1/k, ..., (k-1)/k`.
    #[serde(default = "default_pp_points")]
    pub pp_points: usize,
    /// Abort when a method fails on more than this fraction of scenarios.
    #[serde(default = "default_failure_fraction")]
    pub max_failure_fraction: f64,
}

impl StudyConfig {
    pub fn new(generator: ModelParams) -> Self {
        StudyConfig {
            generator,
            n_scenarios: default_n(),
            m_draws: default_m(),
            methods: default_methods(),
            energy_beta: default_beta(),
            intervals: default_levels(),
            pit_bins: default_bins(),
            master_seed: 0,
            target: Target::default(),
            residual_adjustment: ResidualAdjustment::default(),
            unifnorm_variance: UnifnormVariance::default(),
            pit_mode: PitMode::default(),
            energy_pairs: None,
            pp_points: default_pp_points(),
            max_failure_fraction: default_failure_fraction(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, StudyError> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| StudyError::InvalidConfig(e.to_string()))?;
        Ok(cfg)
    }

    pub fn apply_preset(&mut self, preset: Preset) {
        (self.n_scenarios, self.m_draws) = preset.sizes();
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |msg: String| Err(StudyError::InvalidConfig(msg));
        if let Err(e) = self.generator.validate() {
            return bad(format!("generator: {e}"));
        }
        if self.n_scenarios < 1 {
            return bad("n_scenarios must be at least 1".into());
        }
        if self.m_draws < 2 {
            return bad("m_draws must be at least 2".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods must not repeat".into());
        }
        if !(self.energy_beta > 0.0 && self.energy_beta < 2.0) {
            return bad(format!("energy_beta must lie in (0, 2), got {}", self.energy_beta));
        }
        if let Some(l) = self.intervals.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return bad(format!("interval level {l} is outside (0, 1)"));
        }
        if self.pit_bins < 1 {
            return bad("pit_bins must be at least 1".into());
        }
        if self.pp_points < 2 {
            return bad("pp_points must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return bad("max_failure_fraction must lie in [0, 1]".into());
        }
        let n = self.generator.n();
        if n < 2 {
            return bad("generator dimension must be at least 2".into());
        }
        if let Some(m) = self.methods.iter().find(|m| m.needs_dispersion()) {
            if n < 3 {
                return bad(format!("method {m} needs a generator dimension of at least 3, got {n}"));
            }
        }
        Ok(())
    }

    fn randomize_pit(&self, method: Method) -> bool {
        match self.pit_mode {
            PitMode::Always => true,
            PitMode::Never => false,
            PitMode::Auto => match method {
                Method::Ideal => self.generator.kind().is_count(),
                m => m.model_kind().is_some_and(ModelKind::is_count),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
    #[error("method {method} failed on {failures} of {total} scenarios")]
    ExcessiveFailures { method: Method, failures: usize, total: usize, report: Box<StudyReport> },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
}

/// Predicts the target of one scenario with one method.
pub fn predict(
    method: Method,
    scenario: &ScenarioTruth,
    cfg: &StudyConfig,
    rng: &mut StreamRng,
) -> Result<Prediction, String> {
    let upper: &Triangle = &scenario.upper;
    let m = cfg.m_draws;
    let parametric = |params: &ModelParams, rng: &mut StreamRng| -> Result<Prediction, String> {
        let p = ParametricPredictor::new(params, upper, cfg.target).map_err(|e| e.to_string())?;
        Ok(Prediction {
            sample: PredictiveSample::new(method.name(), p.sample(m, rng)),
            diagnostics: Diagnostics::default(),
        })
    };
    let boot =
        |power| BootstrapConfig { replicates: m, variance_power: power, residual_adjustment: cfg.residual_adjustment };
    let pred = match method {
        Method::Ideal => parametric(&scenario.generator, rng)?,
        Method::Uniform => uniform_predict(upper, m, cfg.target, rng).map_err(|e| e.to_string())?,
        Method::Unifnorm => {
            unifnorm_predict(upper, m, cfg.target, cfg.unifnorm_variance, rng).map_err(|e| e.to_string())?
        }
        Method::BootstrapGamma => {
            bootstrap_predict(upper, &boot(VariancePower::Gamma), cfg.target, rng).map_err(|e| e.to_string())?
        }
        Method::BootstrapOdp => {
            bootstrap_predict(upper, &boot(VariancePower::Odp), cfg.target, rng).map_err(|e| e.to_string())?
        }
        other => {
            let kind = other.model_kind().expect("parametric method");
            let params = fit(kind, upper).map_err(|e| e.to_string())?;
            parametric(&params, rng)?
        }
    };
    if pred.sample.values().iter().any(|v| !v.is_finite()) {
        return Err("non-finite predictive draw".into());
    }
    Ok(pred)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScenarioOutcome {
    Scored {
        #[serde(flatten)]
        score: ScenarioScore,
        diagnostics: Diagnostics,
    },
    Failed {
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub level: f64,
    /// Percentage of scored scenarios strictly inside the interval.
    pub coverage_pct: f64,
    pub avg_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub successes: usize,
    pub failures: usize,
    /// Failure reason to count.
    pub failure_reasons: BTreeMap<String, usize>,
    pub mean_crps: Option<f64>,
    pub crps_std_error: Option<f64>,
    pub mean_energy: Option<f64>,
    pub mean_msep: Option<f64>,
    pub median_msep: Option<f64>,
    pub coverage: Vec<CoverageSummary>,
    pub pit_histogram: Vec<HistogramBin>,
    pub pp_curve: Vec<PpPoint>,
    pub diagnostics: Diagnostics,
    /// One entry per scenario, in scenario order.
    pub scenarios: Vec<ScenarioOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub n_scenarios: usize,
    pub m_draws: usize,
    pub triangle_size: usize,
    pub target: Target,
    pub generator: ModelParams,
    pub energy_beta: f64,
    pub intervals: Vec<f64>,
    pub pit_bins: usize,
    pub residual_adjustment: ResidualAdjustment,
    pub unifnorm_variance: UnifnormVariance,
    pub pit_mode: PitMode,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub metadata: RunMetadata,
    /// One entry per configured method, in configuration order.
    pub methods: Vec<MethodReport>,
}

impl StudyReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

struct Cell {
    outcome: ScenarioOutcome,
    pp: Vec<bool>,
}

/// Runs the study on the global rayon pool.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport, StudyError> {
    cfg.validate()?;
    let seed = cfg.master_seed;
    let grid = uniform_grid(cfg.pp_points);
    let opts =
        ScoringOptions { energy_beta: cfg.energy_beta, energy_pairs: cfg.energy_pairs, levels: cfg.intervals.clone() };

    let scenarios: Vec<ScenarioTruth> = (0..cfg.n_scenarios as u64)
        .into_par_iter()
        .map(|i| generate_scenario(&cfg.generator, &mut stream(seed, &[SCENARIO_TAG, i])))
        .collect();

    let table: Vec<Vec<Cell>> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, sc)| {
            let i = i as u64;
            let obs = sc.realized(cfg.target);
            let run = |method: Method| predict(method, sc, cfg, &mut stream(seed, &[PREDICT_TAG, i, method.id()]));
            let oracle = run(Method::Ideal);
            cfg.methods
                .par_iter()
                .map(|&method| {
                    let pred = if method == Method::Ideal { oracle.clone() } else { run(method) };
                    let pred = match (pred, &oracle) {
                        (Ok(p), Ok(_)) => p,
                        (Err(reason), _) => {
                            return Cell { outcome: ScenarioOutcome::Failed { reason }, pp: Vec::new() }
                        }
                        (_, Err(reason)) => {
                            return Cell {
                                outcome: ScenarioOutcome::Failed { reason: format!("oracle: {reason}") },
                                pp: Vec::new(),
                            }
                        }
                    };
                    let z = &oracle.as_ref().expect("checked above").sample;
                    let mut rng = stream(seed, &[SCORE_TAG, i, method.id()]);
                    let score = score_scenario(&pred.sample, obs, z, cfg.randomize_pit(method), &opts, &mut rng);
                    Cell {
                        pp: pp_below(&pred.sample, obs, &grid),
                        outcome: ScenarioOutcome::Scored { score, diagnostics: pred.diagnostics },
                    }
                })
                .collect()
        })
        .collect();

    let mut methods = Vec::with_capacity(cfg.methods.len());
    for (k, &method) in cfg.methods.iter().enumerate() {
        let cells: Vec<&Cell> = table.iter().map(|row| &row[k]).collect();
        methods.push(aggregate(method, &cells, cfg, &grid));
    }
    let report = StudyReport {
        metadata: RunMetadata {
            master_seed: seed,
            n_scenarios: cfg.n_scenarios,
            m_draws: cfg.m_draws,
            triangle_size: cfg.generator.n(),
            target: cfg.target,
            generator: cfg.generator.clone(),
            energy_beta: cfg.energy_beta,
            intervals: cfg.intervals.clone(),
            pit_bins: cfg.pit_bins,
            residual_adjustment: cfg.residual_adjustment,
            unifnorm_variance: cfg.unifnorm_variance,
            pit_mode: cfg.pit_mode,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        methods,
    };
    let total = cfg.n_scenarios;
    if let Some(m) = report.methods.iter().find(|m| m.failures as f64 > cfg.max_failure_fraction * total as f64) {
        return Err(StudyError::ExcessiveFailures {
            method: m.method,
            failures: m.failures,
            total,
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// Runs the study on a private pool with `threads` workers; `0` uses the
/// rayon default. The report does not depend on `threads`.
pub fn run_study_with_threads(cfg: &StudyConfig, threads: usize) -> Result<StudyReport, StudyError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StudyError::ThreadPool(e.to_string()))?;
    pool.install(|| run_study(cfg))
}

fn aggregate(method: Method, cells: &[&Cell], cfg: &StudyConfig, grid: &[f64]) -> MethodReport {
    let mut failure_reasons = BTreeMap::new();
    let mut diagnostics = Diagnostics::default();
    let mut scores = Vec::new();
    for c in cells {
        match &c.outcome {
            ScenarioOutcome::Scored { score, diagnostics: d } => {
                diagnostics.merge(*d);
                scores.push(score);
            }
            ScenarioOutcome::Failed { reason } => *failure_reasons.entry(reason.clone()).or_insert(0) += 1,
        }
    }
    let ok = scores.len();
    let mean =
        |f: &dyn Fn(&ScenarioScore) -> f64| (ok > 0).then(|| scores.iter().map(|s| f(s)).sum::<f64>() / ok as f64);
    let mean_crps = mean(&|s| s.crps);
    let crps_std_error = mean_crps.filter(|_| ok > 1).map(|m| {
        let var = scores.iter().map(|s| (s.crps - m).powi(2)).sum::<f64>() / (ok as f64 - 1.0);
        (var / ok as f64).sqrt()
    });
    let median_msep = (ok > 0).then(|| {
        let mut v: Vec<f64> = scores.iter().map(|s| s.msep.value).collect();
        v.sort_unstable_by(f64::total_cmp);
        if ok % 2 == 1 {
            v[ok / 2]
        } else {
            0.5 * (v[ok / 2 - 1] + v[ok / 2])
        }
    });
    let coverage = cfg
        .intervals
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let denom = ok.max(1) as f64;
            CoverageSummary {
                level,
                coverage_pct: 100.0 * scores.iter().filter(|s| s.intervals[l].covered).count() as f64 / denom,
                avg_width: scores.iter().map(|s| s.intervals[l].width).sum::<f64>() / denom,
            }
        })
        .collect();
    let pits: Vec<f64> = scores.iter().map(|s| s.pit).collect();
    let pp_rows = cells.iter().filter(|c| matches!(c.outcome, ScenarioOutcome::Scored { .. })).map(|c| c.pp.as_slice());
    MethodReport {
        method,
        successes: ok,
        failures: cells.len() - ok,
        failure_reasons,
        mean_crps,
        crps_std_error,
        mean_energy: mean(&|s| s.energy),
        mean_msep: mean(&|s| s.msep.value),
        median_msep,
        coverage,
        pit_histogram: pit_histogram(&pits, cfg.pit_bins),
        pp_curve: pp_curve_from_indicators(pp_rows, grid),
        diagnostics,
        scenarios: cells.iter().map(|c| c.outcome.clone()).collect(),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes `summary.json`, `scores.csv`, `pit.csv`, `ppcurve.csv` and
/// `coverage.csv` into `dir`, creating it if needed.
pub fn emit_report(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>, StudyError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| StudyError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut scores = String::from("method,scenario,crps,energy,pit,msep,status\n");
    let mut pit = String::from("method,bin_left,bin_right,count\n");
    let mut pp = String::from("method,p,fraction\n");
    let mut cov = String::from("method,level,coverage_pct,avg_width,successes,failures\n");
    for m in &report.methods {
        let name = m.method.name();
        for (i, s) in m.scenarios.iter().enumerate() {
            match s {
                ScenarioOutcome::Scored { score, .. } => scores.push_str(&format!(
                    "{name},{i},{},{},{},{},ok\n",
                    score.crps, score.energy, score.pit, score.msep.value
                )),
                ScenarioOutcome::Failed { reason } => {
                    scores.push_str(&format!("{name},{i},,,,,{}\n", csv_field(&format!("failed: {reason}"))))
                }
            }
        }
        for b in &m.pit_histogram {
            pit.push_str(&format!("{name},{},{},{}\n", b.bin_left, b.bin_right, b.count));
        }
        for p in &m.pp_curve {
            pp.push_str(&format!("{name},{},{}\n", p.p, p.fraction));
        }
        for c in &m.coverage {
            cov.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                c.level, c.coverage_pct, c.avg_width, m.successes, m.failures
            ));
        }
    }
    let summary = serde_json::to_string_pretty(report).expect("report serializes") + "\n";

    let mut written = Vec::new();
    for (file, body) in [
        ("summary.json", summary),
        ("scores.csv", scores),
        ("pit.csv", pit),
        ("ppcurve.csv", pp),
        ("coverage.csv", cov),
    ] {
        let path = dir.join(file);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}

/// Plain-text table of the per-method aggregates.
pub fn format_summary(report: &StudyReport) -> String {
    let mut out = format!(
        "{:<16} {:>6} {:>14} {:>14} {:>14} {:>14}",
        "method", "fails", "mean_crps", "mean_energy", "mean_msep", "median_msep"
    );
    for l in &report.metadata.intervals {
        out.push_str(&format!(" {:>9} {:>12}", format!("cov{:.0}", l * 100.0), format!("width{:.0}", l * 100.0)));
    }
    out.push('\n');
    let f = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
    for m in &report.methods {
        out.push_str(&format!(
            "{:<16} {:>6} {:>14} {:>14} {:>14} {:>14}",
            m.method.name(),
            m.failures,
            f(m.mean_crps),
            f(m.mean_energy),
            f(m.mean_msep),
            f(m.median_msep)
        ));
        for c in &m.coverage {
            out.push_str(&format!(" {:>9.1} {:>12.1}", c.coverage_pct, c.avg_width));
        }
        out.push('\n');
    }
    out
}
