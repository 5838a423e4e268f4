//! The four-actuary introductory examples.
//!
//! A latent parameter is drawn, then a realization; each actuary forecasts
//! the realization with a different amount of knowledge about the latent
//! parameter. Example 1 is log-normal with `μ ~ N(0, 1)` and
//! `ξ ~ LN(μ, 1)`; example 2 is Poisson with `λ ~ Γ(1.5, scale 0.5)` and
//! `η ~ Poisson(1000 λ)`.
//!
//! The intern's example-1 forecast `LN(-|μ|, σ²)` with `σ² = 4μ + 1` for
//! `μ >= 0` and `1` otherwise matches the true log-normal mean only on the
//! `μ >= 0` branch. It is implemented as tabulated.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{fork_key, stream};
use crate::sampling;
use crate::scoring::{coverage_and_width, crps, pit, pit_histogram, HistogramBin, PredictiveSample};

/// Exposure `x` of example 2.
pub const EX2_EXPOSURE: f64 = 1000.0;
/// Shape `α` of the example-2 gamma prior.
pub const EX2_SHAPE: f64 = 1.5;
/// Scale `β` of the example-2 gamma prior.
pub const EX2_SCALE: f64 = 0.5;

/// Interval levels reported for the examples.
pub const EXAMPLE_LEVELS: [f64; 2] = [0.6667, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    #[serde(alias = "ex1")]
    LogNormalEx1,
    #[serde(alias = "ex2")]
    PoissonEx2,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::LogNormalEx1 => "ex1",
            Setting::PoissonEx2 => "ex2",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ex1" | "lognormal" | "log_normal_ex1" => Ok(Setting::LogNormalEx1),
            "ex2" | "poisson" | "poisson_ex2" => Ok(Setting::PoissonEx2),
            other => Err(format!("unknown example setting '{other}' (expected ex1 or ex2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActuaryKind {
    Ideal,
    LongTerm,
    Ordinary,
    Intern,
}

impl ActuaryKind {
    pub const ALL: [ActuaryKind; 4] =
        [ActuaryKind::Ideal, ActuaryKind::LongTerm, ActuaryKind::Ordinary, ActuaryKind::Intern];

    pub fn name(self) -> &'static str {
        match self {
            ActuaryKind::Ideal => "ideal",
            ActuaryKind::LongTerm => "long-term",
            ActuaryKind::Ordinary => "ordinary",
            ActuaryKind::Intern => "intern",
        }
    }
}

/// One actuary's predictive law for one simulated year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuaryForecast {
    pub kind: ActuaryKind,
    pub setting: Setting,
    /// μ for example 1, λ for example 2.
    pub latent: f64,
    /// The ordinary actuary's estimation error, drawn once per simulation:
    /// `±1` in example 1, `1 ± 0.1` in example 2. Unused by other kinds.
    pub delta: f64,
}

impl ActuaryForecast {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mu = self.latent;
        let lam = self.latent;
        let x = EX2_EXPOSURE;
        match (self.setting, self.kind) {
            (Setting::LogNormalEx1, ActuaryKind::Ideal) => sampling::lognormal(rng, mu, 1.0),
            (Setting::LogNormalEx1, ActuaryKind::LongTerm) => sampling::lognormal(rng, 0.0, 2.0),
            (Setting::LogNormalEx1, ActuaryKind::Ordinary) => {
                let shift = if rng.random::<bool>() { 0.0 } else { self.delta };
                sampling::lognormal(rng, mu + shift, 1.0)
            }
            (Setting::LogNormalEx1, ActuaryKind::Intern) => {
                let sigma2 = if mu >= 0.0 { 4.0 * mu + 1.0 } else { 1.0 };
                sampling::lognormal(rng, -mu.abs(), sigma2)
            }
            (Setting::PoissonEx2, ActuaryKind::Ideal) => sampling::poisson(rng, x * lam),
            (Setting::PoissonEx2, ActuaryKind::LongTerm) => {
                sampling::negative_binomial(rng, EX2_SHAPE, 1.0 / (1.0 + x * EX2_SCALE))
            }
            (Setting::PoissonEx2, ActuaryKind::Ordinary) => {
                let factor = if rng.random::<bool>() { 1.0 } else { self.delta };
                sampling::poisson(rng, x * lam * factor)
            }
            (Setting::PoissonEx2, ActuaryKind::Intern) => sampling::negative_binomial(rng, 2.0 * x * lam, 2.0 / 3.0),
        }
    }
}

/// Reference MSEP for one actuary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum MsepReference {
    /// Closed form.
    Analytic(f64),
    /// Simulated reference value, usable as a regression target only.
    Empirical(f64),
}

impl MsepReference {
    pub fn value(self) -> f64 {
        match self {
            MsepReference::Analytic(v) | MsepReference::Empirical(v) => v,
        }
    }
}

/// Reference MSEP: closed forms for example 2, tabulated values for example 1.
pub fn analytic_msep(setting: Setting, kind: ActuaryKind) -> MsepReference {
    match setting {
        Setting::PoissonEx2 => {
            let (x, a, b) = (EX2_EXPOSURE, EX2_SHAPE, EX2_SCALE);
            let base = x * a * b;
            MsepReference::Analytic(match kind {
                ActuaryKind::Ideal | ActuaryKind::Intern => base,
                ActuaryKind::LongTerm => base * (1.0 + x * b),
                // E[λ²] = α(1 + α)β², squared bias x²λ²/400.
                ActuaryKind::Ordinary => base * (1.0 + x * (1.0 + a) * b / 400.0),
            })
        }
        Setting::LogNormalEx1 => MsepReference::Empirical(match kind {
            ActuaryKind::Ideal => 34.5,
            ActuaryKind::LongTerm => 47.2,
            ActuaryKind::Ordinary => 37.2,
            ActuaryKind::Intern => 34.5,
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: f64,
    /// Percentage of simulations whose realization fell strictly inside.
    pub coverage_pct: f64,
    pub avg_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActuaryResult {
    pub kind: ActuaryKind,
    pub mean_crps: f64,
    pub crps_std_error: f64,
    pub intervals: Vec<LevelSummary>,
    /// Mean of `(realization - forecast mean)²`.
    pub msep: f64,
    pub msep_std_error: f64,
    pub reference_msep: MsepReference,
    pub pit_histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub setting: Setting,
    pub n_sims: usize,
    pub m_draws: usize,
    pub actuaries: Vec<ActuaryResult>,
}

impl ExampleReport {
    pub fn actuary(&self, kind: ActuaryKind) -> &ActuaryResult {
        self.actuaries.iter().find(|a| a.kind == kind).expect("every actuary is reported")
    }

    /// One row per actuary.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "setting,actuary,mean_crps,crps_se,coverage_66,coverage_90,width_66,width_90,msep,msep_se,reference_msep,reference_kind\n",
        );
        for a in &self.actuaries {
            let (kind, value) = match a.reference_msep {
                MsepReference::Analytic(v) => ("analytic", v),
                MsepReference::Empirical(v) => ("empirical", v),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.setting,
                a.kind.name(),
                a.mean_crps,
                a.crps_std_error,
                a.intervals[0].coverage_pct,
                a.intervals[1].coverage_pct,
                a.intervals[0].avg_width,
                a.intervals[1].avg_width,
                a.msep,
                a.msep_std_error,
                value,
                kind,
            ));
        }
        out
    }
}

struct SimOutcome {
    crps: f64,
    covered: [bool; 2],
    width: [f64; 2],
    sq_err: f64,
    pit: f64,
}

fn mean_and_se(v: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = v.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Simulates `n_sims` years and scores each actuary's `m_draws`-sample
/// forecast against the realization. Simulation `s` uses its own streams,
/// so results do not depend on the thread count.
pub fn run_example<R: Rng + ?Sized>(setting: Setting, n_sims: usize, m_draws: usize, rng: &mut R) -> ExampleReport {
    assert!(n_sims >= 1, "at least one simulation");
    assert!(m_draws >= 2, "at least two predictive draws");
    let key = fork_key(rng);
    let randomize = setting == Setting::PoissonEx2;

    let sims: Vec<[SimOutcome; 4]> = (0..n_sims)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream(key, &[s as u64]);
            let (latent, obs, delta) = match setting {
                Setting::LogNormalEx1 => {
                    let mu = sampling::normal(&mut rng, 0.0, 1.0);
                    let xi = sampling::lognormal(&mut rng, mu, 1.0);
                    let delta = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    (mu, xi, delta)
                }
                Setting::PoissonEx2 => {
                    let lam = sampling::gamma_shape_scale(&mut rng, EX2_SHAPE, EX2_SCALE);
                    let eta = sampling::poisson(&mut rng, EX2_EXPOSURE * lam);
                    let delta = if rng.random::<bool>() { 1.1 } else { 0.9 };
                    (lam, eta, delta)
                }
            };
            ActuaryKind::ALL.map(|kind| {
                let mut rng = stream(key, &[s as u64, 1 + kind as u64]);
                let fc = ActuaryForecast { kind, setting, latent, delta };
                let draws: Vec<f64> = (0..m_draws).map(|_| fc.draw(&mut rng)).collect();
                let sample = PredictiveSample::new(kind.name(), draws);
                let iv = EXAMPLE_LEVELS.map(|l| coverage_and_width(&sample, obs, l));
                let err = obs - sample.mean();
                SimOutcome {
                    crps: crps(&sample, obs),
                    covered: iv.map(|o| o.covered),
                    width: iv.map(|o| o.width),
                    sq_err: err * err,
                    pit: pit(&sample, obs, randomize, &mut rng),
                }
            })
        })
        .collect();

    let actuaries = ActuaryKind::ALL
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let col = sims.iter().map(move |row| &row[k]);
            let (mean_crps, crps_std_error) = mean_and_se(col.clone().map(|o| o.crps));
            let (msep, msep_std_error) = mean_and_se(col.clone().map(|o| o.sq_err));
            let intervals = EXAMPLE_LEVELS
                .iter()
                .enumerate()
                .map(|(l, &level)| LevelSummary {
                    level,
                    coverage_pct: 100.0 * col.clone().filter(|o| o.covered[l]).count() as f64 / n_sims as f64,
                    avg_width: col.clone().map(|o| o.width[l]).sum::<f64>() / n_sims as f64,
                })
                .collect();
            let pits: Vec<f64> = col.map(|o| o.pit).collect();
            ActuaryResult {
                kind,
                mean_crps,
                crps_std_error,
                intervals,
                msep,
                msep_std_error,
                reference_msep: analytic_msep(setting, kind),
                pit_histogram: pit_histogram(&pits, 20),
            }
        })
        .collect();

    ExampleReport { setting, n_sims, m_draws, actuaries }
}
