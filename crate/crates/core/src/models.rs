//! The five distributional development models: parameter estimation from an
//! upper triangle, generation of full squares from known parameters, and
//! predictive simulation of the ultimate claim given an upper triangle.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainladder::{
    estimate_dev_factors, fit_chain_ladder, payout_pattern, pearson_dispersion, ChainLadderError, DevFactors,
    PayoutPattern, VariancePower,
};
use crate::sampling;
use crate::triangle::{Flavor, Target, Triangle, UltimateClaim};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    ChainLadder(#[from] ChainLadderError),
    #[error("log-normal fit needs positive cumulative values, cell ({row}, {col}) is not")]
    NonPositiveCumulative { row: usize, col: usize },
    #[error("development column {0} decreases; pattern entry would be negative")]
    NegativeDevelopment(usize),
    #[error("estimated dispersion is zero; the fitted model is degenerate")]
    ZeroDispersion,
    #[error("parameter dimension {params} does not match triangle dimension {triangle}")]
    DimensionMismatch { params: usize, triangle: usize },
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[serde(alias = "lognormal")]
    LogNormal,
    #[serde(alias = "negbinomial", alias = "negative_binomial", alias = "negbin")]
    NegBinomial,
    Poisson,
    #[serde(alias = "over_dispersed_poisson")]
    Odp,
    Gamma,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] =
        [ModelKind::LogNormal, ModelKind::NegBinomial, ModelKind::Poisson, ModelKind::Odp, ModelKind::Gamma];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LogNormal => "log_normal",
            ModelKind::NegBinomial => "neg_binomial",
            ModelKind::Poisson => "poisson",
            ModelKind::Odp => "odp",
            ModelKind::Gamma => "gamma",
        }
    }

    /// Integer-valued models, whose predictive samples have ties.
    pub fn is_count(self) -> bool {
        matches!(self, ModelKind::NegBinomial | ModelKind::Poisson)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| format!("unknown model {s:?}"))
    }
}

/// Parameters of one development model.
///
/// Serialized as a flat document, e.g.
/// `{"model": "gamma", "mu": [...], "gamma": [...], "nu": 2.22}`.
/// For `log_normal`, `mu` holds the per-column log-scales and `sigma2` the
/// shapes; for the others `mu` holds the row levels and `gamma` the payout
/// pattern. A pattern that does not sum to one is renormalized and the
/// removed factor moved onto the row levels, which leaves each cell mean
/// `μ_i γ_j` unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsDoc", into = "ParamsDoc")]
pub enum ModelParams {
    LogNormal {
        mu: Vec<f64>,
        sigma2: Vec<f64>,
    },
    NegBinomial {
        pattern: PayoutPattern,
        dev: DevFactors,
        /// First-column cumulative values used when generating squares.
        base_column: Vec<f64>,
    },
    Poisson {
        mu_rows: Vec<f64>,
        pattern: PayoutPattern,
    },
    Odp {
        mu_rows: Vec<f64>,
        pattern: PayoutPattern,
        phi: f64,
    },
    Gamma {
        mu_rows: Vec<f64>,
        pattern: PayoutPattern,
        nu: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma2: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base_column: Option<Vec<f64>>,
}

impl From<ModelParams> for ParamsDoc {
    fn from(p: ModelParams) -> Self {
        let mut doc =
            ParamsDoc { model: p.kind(), mu: None, sigma2: None, gamma: None, phi: None, nu: None, base_column: None };
        match p {
            ModelParams::LogNormal { mu, sigma2 } => {
                doc.mu = Some(mu);
                doc.sigma2 = Some(sigma2);
            }
            ModelParams::NegBinomial { pattern, base_column, .. } => {
                doc.gamma = Some(pattern.values().to_vec());
                doc.base_column = Some(base_column);
            }
            ModelParams::Poisson { mu_rows, pattern } => {
                doc.mu = Some(mu_rows);
                doc.gamma = Some(pattern.values().to_vec());
            }
            ModelParams::Odp { mu_rows, pattern, phi } => {
                doc.mu = Some(mu_rows);
                doc.gamma = Some(pattern.values().to_vec());
                doc.phi = Some(phi);
            }
            ModelParams::Gamma { mu_rows, pattern, nu } => {
                doc.mu = Some(mu_rows);
                doc.gamma = Some(pattern.values().to_vec());
                doc.nu = Some(nu);
            }
        }
        doc
    }
}

impl TryFrom<ParamsDoc> for ModelParams {
    type Error = ModelError;

    fn try_from(doc: ParamsDoc) -> Result<Self, Self::Error> {
        fn need<T>(v: Option<T>, field: &str, model: ModelKind) -> Result<T, ModelError> {
            v.ok_or_else(|| ModelError::Invalid(format!("model {:?} requires field {field:?}", model.name())))
        }
        let kind = doc.model;
        let params = match kind {
            ModelKind::LogNormal => {
                ModelParams::LogNormal { mu: need(doc.mu, "mu", kind)?, sigma2: need(doc.sigma2, "sigma2", kind)? }
            }
            ModelKind::NegBinomial => {
                let (pattern, _) = PayoutPattern::normalized(need(doc.gamma, "gamma", kind)?)?;
                let dev = DevFactors::from_pattern(&pattern)?;
                ModelParams::NegBinomial { pattern, dev, base_column: need(doc.base_column, "base_column", kind)? }
            }
            ModelKind::Poisson | ModelKind::Odp | ModelKind::Gamma => {
                let (pattern, scale) = PayoutPattern::normalized(need(doc.gamma, "gamma", kind)?)?;
                let mu_rows: Vec<f64> = need(doc.mu, "mu", kind)?.into_iter().map(|m| m * scale).collect();
                match kind {
                    ModelKind::Poisson => ModelParams::Poisson { mu_rows, pattern },
                    ModelKind::Odp => ModelParams::Odp { mu_rows, pattern, phi: need(doc.phi, "phi", kind)? },
                    _ => ModelParams::Gamma { mu_rows, pattern, nu: need(doc.nu, "nu", kind)? },
                }
            }
        };
        params.validate()?;
        Ok(params)
    }
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::LogNormal { .. } => ModelKind::LogNormal,
            ModelParams::NegBinomial { .. } => ModelKind::NegBinomial,
            ModelParams::Poisson { .. } => ModelKind::Poisson,
            ModelParams::Odp { .. } => ModelKind::Odp,
            ModelParams::Gamma { .. } => ModelKind::Gamma,
        }
    }

    /// Triangle dimension.
    pub fn n(&self) -> usize {
        match self {
            ModelParams::LogNormal { mu, .. } => mu.len(),
            ModelParams::NegBinomial { pattern, .. } => pattern.len(),
            ModelParams::Poisson { mu_rows, .. }
            | ModelParams::Odp { mu_rows, .. }
            | ModelParams::Gamma { mu_rows, .. } => mu_rows.len(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n();
        if n < 2 {
            return Err(ModelError::Invalid(format!("dimension {n} is below 2")));
        }
        let finite_nonneg = |v: &[f64], what: &str| -> Result<(), ModelError> {
            if v.len() != n {
                return Err(ModelError::Invalid(format!("{what} has length {}, expected {n}", v.len())));
            }
            match v.iter().find(|x| !x.is_finite() || **x < 0.0) {
                Some(x) => Err(ModelError::Invalid(format!("{what} entry {x} is negative or non-finite"))),
                None => Ok(()),
            }
        };
        let positive = |x: f64, what: &str| -> Result<(), ModelError> {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(ModelError::Invalid(format!("{what} = {x} must be positive and finite")))
            }
        };
        match self {
            ModelParams::LogNormal { mu, sigma2 } => {
                if mu.iter().any(|m| !m.is_finite()) {
                    return Err(ModelError::Invalid("mu must be finite".into()));
                }
                finite_nonneg(sigma2, "sigma2")
            }
            ModelParams::NegBinomial { pattern, base_column, .. } => {
                finite_nonneg(pattern.values(), "gamma")?;
                finite_nonneg(base_column, "base_column")
            }
            ModelParams::Poisson { mu_rows, pattern } => {
                finite_nonneg(mu_rows, "mu")?;
                finite_nonneg(pattern.values(), "gamma")
            }
            ModelParams::Odp { mu_rows, pattern, phi } => {
                finite_nonneg(mu_rows, "mu")?;
                finite_nonneg(pattern.values(), "gamma")?;
                positive(*phi, "phi")
            }
            ModelParams::Gamma { mu_rows, pattern, nu } => {
                finite_nonneg(mu_rows, "mu")?;
                finite_nonneg(pattern.values(), "gamma")?;
                positive(*nu, "nu")
            }
        }
    }

    /// Mean of the incremental cell `(i, j)` for the row-level models.
    fn cell_mean(mu_rows: &[f64], pattern: &PayoutPattern, i: usize, j: usize) -> f64 {
        mu_rows[i] * pattern.values()[j]
    }
}

fn check_pattern(pattern: &PayoutPattern) -> Result<(), ModelError> {
    match pattern.values().iter().position(|&g| g < 0.0) {
        Some(j) => Err(ModelError::NegativeDevelopment(j)),
        None => Ok(()),
    }
}

/// Estimates the parameters of `kind` from an upper triangle (either flavor).
pub fn fit(kind: ModelKind, upper: &Triangle) -> Result<ModelParams, ModelError> {
    let upper = upper.restrict_upper();
    match kind {
        ModelKind::LogNormal => fit_log_normal(&upper),
        ModelKind::NegBinomial => {
            let dev = estimate_dev_factors(&upper)?;
            let pattern = payout_pattern(&dev);
            check_pattern(&pattern)?;
            let cum = upper.to_cumulative();
            let base_column = (0..cum.n()).map(|i| cum.get(i, 0)).collect();
            Ok(ModelParams::NegBinomial { pattern, dev, base_column })
        }
        ModelKind::Poisson => {
            let cl = fit_chain_ladder(&upper)?;
            check_pattern(&cl.pattern)?;
            Ok(ModelParams::Poisson { mu_rows: cl.mu_rows, pattern: cl.pattern })
        }
        ModelKind::Odp | ModelKind::Gamma => {
            let cl = fit_chain_ladder(&upper)?;
            check_pattern(&cl.pattern)?;
            let power = if kind == ModelKind::Odp { VariancePower::Odp } else { VariancePower::Gamma };
            let disp = pearson_dispersion(&upper, &cl.fitted_upper(), power)?;
            if !(disp.phi > 0.0) {
                return Err(ModelError::ZeroDispersion);
            }
            Ok(if kind == ModelKind::Odp {
                ModelParams::Odp { mu_rows: cl.mu_rows, pattern: cl.pattern, phi: disp.phi }
            } else {
                ModelParams::Gamma { mu_rows: cl.mu_rows, pattern: cl.pattern, nu: 1.0 / disp.phi }
            })
        }
    }
}

/// Log-scale means and variances of the development factors
/// `F_{i,j} = C_{i,j} / C_{i,j-1}` with `C_{i,-1} = 1`. Column `j` (zero-based)
/// has `n - j` observations and sample-variance divisor `n - j - 1`; the last
/// column's variance is fixed at 0.
fn fit_log_normal(upper: &Triangle) -> Result<ModelParams, ModelError> {
    let c = upper.to_cumulative();
    let n = c.n();
    let mut mu = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut logs = Vec::with_capacity(n);
    for j in 0..n {
        logs.clear();
        for i in 0..n - j {
            let cur = c.get(i, j);
            let prev = if j == 0 { 1.0 } else { c.get(i, j - 1) };
            if !(cur > 0.0) {
                return Err(ModelError::NonPositiveCumulative { row: i, col: j });
            }
            if !(prev > 0.0) {
                return Err(ModelError::NonPositiveCumulative { row: i, col: j - 1 });
            }
            logs.push((cur / prev).ln());
        }
        let m = logs.iter().sum::<f64>() / logs.len() as f64;
        mu.push(m);
        if j + 1 < n {
            let ss: f64 = logs.iter().map(|l| (l - m) * (l - m)).sum();
            sigma2.push(ss / (n - j - 1) as f64);
        } else {
            sigma2.push(0.0);
        }
    }
    Ok(ModelParams::LogNormal { mu, sigma2 })
}

/// A generated full square together with its masked view and true target.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTruth {
    /// Incremental full square.
    pub full_square: Triangle,
    /// Incremental upper triangle.
    pub upper: Triangle,
    pub true_uc: UltimateClaim,
    pub generator: ModelParams,
}

impl ScenarioTruth {
    pub fn realized(&self, target: Target) -> f64 {
        match target {
            Target::UltimateClaim => self.true_uc.value(),
            Target::NextYearPayments => target.realized(&self.full_square).expect("scenario square is full"),
        }
    }
}

/// Draws a full square cell by cell from the model's development law.
pub fn generate_scenario<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> ScenarioTruth {
    let n = params.n();
    let full_square = match params {
        ModelParams::LogNormal { mu, sigma2 } => {
            let mut cum = vec![0.0; n * n];
            for i in 0..n {
                let mut c = 1.0;
                for j in 0..n {
                    c *= sampling::lognormal(rng, mu[j], sigma2[j]);
                    cum[i * n + j] = c;
                }
            }
            Triangle::full_from_fn(n, Flavor::Cumulative, |i, j| cum[i * n + j]).to_incremental()
        }
        ModelParams::NegBinomial { dev, base_column, .. } => {
            let mut inc = vec![0.0; n * n];
            for i in 0..n {
                let mut c = base_column[i];
                inc[i * n] = c;
                for j in 1..n {
                    let x = sampling::negative_binomial(rng, c, dev.p()[j - 1]);
                    inc[i * n + j] = x;
                    c += x;
                }
            }
            Triangle::full_from_fn(n, Flavor::Incremental, |i, j| inc[i * n + j])
        }
        ModelParams::Poisson { mu_rows, pattern } => Triangle::full_from_fn(n, Flavor::Incremental, |i, j| {
            sampling::poisson(rng, ModelParams::cell_mean(mu_rows, pattern, i, j))
        }),
        ModelParams::Odp { mu_rows, pattern, phi } => Triangle::full_from_fn(n, Flavor::Incremental, |i, j| {
            phi * sampling::poisson(rng, ModelParams::cell_mean(mu_rows, pattern, i, j) / phi)
        }),
        ModelParams::Gamma { mu_rows, pattern, nu } => Triangle::full_from_fn(n, Flavor::Incremental, |i, j| {
            sampling::gamma_with_mean(rng, *nu, ModelParams::cell_mean(mu_rows, pattern, i, j))
        }),
    };
    let upper = full_square.restrict_upper();
    let true_uc = full_square.ultimate().expect("generated square is full");
    ScenarioTruth { full_square, upper, true_uc, generator: params.clone() }
}

/// Predictive simulator for one (parameters, upper triangle, target) triple.
/// Construction does the per-triangle work once; [`draw`](Self::draw) is the
/// per-sample hot path.
#[derive(Debug, Clone)]
pub struct ParametricPredictor {
    observed: f64,
    law: PredictiveLaw,
}

#[derive(Debug, Clone)]
enum PredictiveLaw {
    /// Per open row: last cumulative value, log-scale sum, log-variance sum.
    /// For the next-year target the row contributes `c (F - 1)` instead of `c F`.
    LogNormal { rows: Vec<(f64, f64, f64)>, increment_only: bool },
    /// Per open row: last cumulative value and the ratios still to apply.
    NegBinomial { rows: Vec<(f64, Vec<f64>)> },
    /// Total lower mean, drawn as one scaled Poisson variable.
    ScaledPoisson { mean: f64, phi: f64 },
    /// Independent gamma cells with common shape.
    Gamma { shape: f64, means: Vec<f64> },
}

impl ParametricPredictor {
    pub fn new(params: &ModelParams, upper: &Triangle, target: Target) -> Result<Self, ModelError> {
        let n = upper.n();
        if params.n() != n {
            return Err(ModelError::DimensionMismatch { params: params.n(), triangle: n });
        }
        let upper = upper.restrict_upper();
        let diag = upper.to_cumulative().latest_diagonal();
        let next_only = target == Target::NextYearPayments;
        // Open rows are 1..n; row i has its last observed column at n-1-i.
        let lower_cells = |i: usize| (n - i..n).filter(move |&j| target.includes(n, i, j));
        let law = match params {
            ModelParams::LogNormal { mu, sigma2 } => {
                let rows = (1..n)
                    .map(|i| {
                        let cols: Vec<usize> = if next_only { vec![n - i] } else { (n - i..n).collect() };
                        let m: f64 = cols.iter().map(|&j| mu[j]).sum();
                        let s: f64 = cols.iter().map(|&j| sigma2[j]).sum();
                        (diag[i], m, s)
                    })
                    .collect();
                PredictiveLaw::LogNormal { rows, increment_only: next_only }
            }
            ModelParams::NegBinomial { dev, .. } => {
                let rows = (1..n)
                    .map(|i| {
                        let last = n - 1 - i;
                        let end = if next_only { last + 1 } else { n - 1 };
                        (diag[i], dev.p()[last..end].to_vec())
                    })
                    .collect();
                PredictiveLaw::NegBinomial { rows }
            }
            ModelParams::Poisson { mu_rows, pattern } | ModelParams::Odp { mu_rows, pattern, .. } => {
                let mean = (1..n)
                    .flat_map(|i| lower_cells(i).map(move |j| (i, j)))
                    .map(|(i, j)| ModelParams::cell_mean(mu_rows, pattern, i, j))
                    .sum();
                let phi = match params {
                    ModelParams::Odp { phi, .. } => *phi,
                    _ => 1.0,
                };
                PredictiveLaw::ScaledPoisson { mean, phi }
            }
            ModelParams::Gamma { mu_rows, pattern, nu } => {
                let means = (1..n)
                    .flat_map(|i| lower_cells(i).map(move |j| (i, j)))
                    .map(|(i, j)| ModelParams::cell_mean(mu_rows, pattern, i, j))
                    .collect();
                PredictiveLaw::Gamma { shape: *nu, means }
            }
        };
        // Log-normal rows are projected from their cumulative value, so only
        // the closed first row stays in the observed part.
        let observed = match (&law, target) {
            (PredictiveLaw::LogNormal { .. }, Target::UltimateClaim) => diag[0],
            _ => target.observed_part(&upper),
        };
        Ok(ParametricPredictor { observed, law })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lower: f64 = match &self.law {
            PredictiveLaw::LogNormal { rows, increment_only } => rows
                .iter()
                .map(|&(c, m, s)| {
                    let f = sampling::lognormal(rng, m, s);
                    if *increment_only {
                        c * (f - 1.0)
                    } else {
                        c * f
                    }
                })
                .sum(),
            PredictiveLaw::NegBinomial { rows } => rows
                .iter()
                .map(|(c0, ps)| {
                    let mut c = *c0;
                    let mut paid = 0.0;
                    for &p in ps {
                        let x = sampling::negative_binomial(rng, c, p);
                        c += x;
                        paid += x;
                    }
                    paid
                })
                .sum(),
            PredictiveLaw::ScaledPoisson { mean, phi } => phi * sampling::poisson(rng, mean / phi),
            PredictiveLaw::Gamma { shape, means } => {
                means.iter().map(|&m| sampling::gamma_with_mean(rng, *shape, m)).sum()
            }
        };
        self.observed + lower
    }

    /// `m` predictive draws.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<f64> {
        (0..m).map(|_| self.draw(rng)).collect()
    }
}

/// One draw of the ultimate claim conditional on `upper` under `params`.
pub fn simulate_ultimate<R: Rng + ?Sized>(
    params: &ModelParams,
    upper: &Triangle,
    rng: &mut R,
) -> Result<UltimateClaim, ModelError> {
    let p = ParametricPredictor::new(params, upper, Target::UltimateClaim)?;
    Ok(UltimateClaim(p.draw(rng)))
}
