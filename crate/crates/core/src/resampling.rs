//! Reserving methods that do not refit a distributional model: the residual
//! bootstrap (over-dispersed Poisson and gamma process), and the two
//! semi-stochastic methods built on empirical development ratios.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chainladder::{
    adjust_residuals, fit_chain_ladder, pearson_dispersion, ChainLadderError, ResidualAdjustment, VariancePower,
};
use crate::rng::{fork_key, stream};
use crate::sampling;
use crate::scoring::PredictiveSample;
use crate::triangle::{Flavor, Target, Triangle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResamplingError {
    #[error(transparent)]
    ChainLadder(#[from] ChainLadderError),
    #[error("development ratio at ({row}, {col}) divides by zero")]
    DegenerateFactor { row: usize, col: usize },
    #[error("ratio pool for column {0} is empty")]
    EmptyPool(usize),
    #[error("every bootstrap replicate failed ({0} attempted)")]
    AllReplicatesFailed(usize),
    #[error("sample size must be at least 1")]
    ZeroSamples,
}

/// Counters for conditions that are tolerated but reported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Bootstrap replicates whose pseudo-triangle could not be refitted.
    pub replicate_failures: u64,
    /// Lower cells with a non-positive process mean, which contribute 0.
    pub non_positive_means: u64,
    /// Unifnorm variances clamped to 0 after rounding made them negative.
    pub clamped_variances: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, other: Diagnostics) {
        self.replicate_failures += other.replicate_failures;
        self.non_positive_means += other.non_positive_means;
        self.clamped_variances += other.clamped_variances;
    }
}

#[derive(Debug, Clone)]
pub struct Prediction {
    pub sample: PredictiveSample,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub variance_power: VariancePower,
    #[serde(default)]
    pub residual_adjustment: ResidualAdjustment,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, variance_power: VariancePower) -> Self {
        BootstrapConfig { replicates, variance_power, residual_adjustment: ResidualAdjustment::default() }
    }
}

/// Residual bootstrap of the chain-ladder fit.
///
/// Each replicate resamples the adjusted Pearson residuals with replacement
/// over all upper cells, inverts them into a pseudo upper triangle
/// `x* = m + r* m^(q/2)`, refits the chain ladder, and draws every target
/// lower cell from the process law with mean `m̃` and variance `φ m̃^q`
/// (scaled Poisson for `q = 1`, gamma for `q = 2`). Replicates that cannot be
/// refitted are dropped and counted. Replicate `r` draws from its own stream,
/// so the output does not depend on thread count.
pub fn bootstrap_predict<R: Rng + ?Sized>(
    upper: &Triangle,
    cfg: &BootstrapConfig,
    target: Target,
    rng: &mut R,
) -> Result<Prediction, ResamplingError> {
    if cfg.replicates == 0 {
        return Err(ResamplingError::ZeroSamples);
    }
    let upper = upper.restrict_upper().to_incremental();
    let n = upper.n();
    let power = cfg.variance_power;
    let cl = fit_chain_ladder(&upper)?;
    let fitted = cl.fitted_upper();
    let disp = pearson_dispersion(&upper, &fitted, power)?;
    let residuals = adjust_residuals(&disp, cfg.residual_adjustment)?;
    let phi = disp.phi;
    let cells: Vec<(f64, f64)> = fitted.rows().flatten().map(|&m| (m, power.scale(m))).collect();
    let observed = target.observed_part(&upper);
    let key = fork_key(rng);

    let outcomes: Vec<(Option<f64>, u64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(key, &[r as u64]);
            let mut it = cells.iter();
            let pseudo = Triangle::upper_from_fn(n, Flavor::Incremental, |_, _| {
                let &(m, scale) = it.next().expect("one fitted value per upper cell");
                m + residuals[rng.random_range(0..residuals.len())] * scale
            });
            let Ok(refit) = fit_chain_ladder(&pseudo) else {
                return (None, 0);
            };
            let mut total = observed;
            let mut non_positive = 0;
            for i in 1..n {
                for j in n - i..n {
                    if !target.includes(n, i, j) {
                        continue;
                    }
                    let m = refit.mean(i, j);
                    total += if phi == 0.0 {
                        m
                    } else if !(m > 0.0) {
                        non_positive += 1;
                        0.0
                    } else {
                        match power {
                            VariancePower::Odp => phi * sampling::poisson(&mut rng, m / phi),
                            VariancePower::Gamma => sampling::gamma_with_mean(&mut rng, 1.0 / phi, m),
                        }
                    };
                }
            }
            (Some(total), non_positive)
        })
        .collect();

    let mut diagnostics = Diagnostics::default();
    let mut values = Vec::with_capacity(outcomes.len());
    for (v, np) in outcomes {
        diagnostics.non_positive_means += np;
        match v {
            Some(v) => values.push(v),
            None => diagnostics.replicate_failures += 1,
        }
    }
    if values.is_empty() {
        return Err(ResamplingError::AllReplicatesFailed(cfg.replicates));
    }
    let label = match power {
        VariancePower::Odp => "bootstrap_odp",
        VariancePower::Gamma => "bootstrap_gamma",
    };
    Ok(Prediction { sample: PredictiveSample::new(label, values), diagnostics })
}

/// Empirical individual development ratios `C_{i,j+1} / C_{i,j}` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPool {
    pools: Vec<Vec<f64>>,
}

impl FactorPool {
    pub fn from_triangle(upper: &Triangle) -> Result<Self, ResamplingError> {
        let c = upper.restrict_upper().to_cumulative();
        let n = c.n();
        let mut pools = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let mut pool = Vec::with_capacity(n - 1 - j);
            for i in 0..n - 1 - j {
                let base = c.get(i, j);
                if base == 0.0 {
                    return Err(ResamplingError::DegenerateFactor { row: i, col: j });
                }
                pool.push(c.get(i, j + 1) / base);
            }
            if pool.is_empty() {
                return Err(ResamplingError::EmptyPool(j));
            }
            pools.push(pool);
        }
        Ok(FactorPool { pools })
    }

    pub fn pool(&self, j: usize) -> &[f64] {
        &self.pools[j]
    }

    pub fn columns(&self) -> usize {
        self.pools.len()
    }

    pub fn mean(&self, j: usize) -> f64 {
        let p = &self.pools[j];
        p.iter().sum::<f64>() / p.len() as f64
    }

    pub fn mean_sq(&self, j: usize) -> f64 {
        let p = &self.pools[j];
        p.iter().map(|a| a * a).sum::<f64>() / p.len() as f64
    }

    pub fn min(&self, j: usize) -> f64 {
        self.pools[j].iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self, j: usize) -> f64 {
        self.pools[j].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> f64 {
        let p = &self.pools[j];
        p[rng.random_range(0..p.len())]
    }
}

/// Columns to project for open row `i` under `target`.
fn projection_columns(n: usize, i: usize, target: Target) -> std::ops::Range<usize> {
    let last = n - 1 - i;
    match target {
        Target::UltimateClaim => last..n - 1,
        Target::NextYearPayments => last..last + 1,
    }
}

/// Uniform method: every open row is extended by ratios drawn uniformly and
/// independently from that column's pool.
pub fn uniform_predict<R: Rng + ?Sized>(
    upper: &Triangle,
    m: usize,
    target: Target,
    rng: &mut R,
) -> Result<Prediction, ResamplingError> {
    if m == 0 {
        return Err(ResamplingError::ZeroSamples);
    }
    let pool = FactorPool::from_triangle(upper)?;
    let n = upper.n();
    let diag = upper.to_cumulative().latest_diagonal();
    let base = match target {
        Target::UltimateClaim => diag[0],
        Target::NextYearPayments => 0.0,
    };
    let values = (0..m)
        .map(|_| {
            let mut total = base;
            for (i, &c0) in diag.iter().enumerate().skip(1) {
                let mut c = c0;
                for j in projection_columns(n, i, target) {
                    c *= pool.draw(j, rng);
                }
                total += match target {
                    Target::UltimateClaim => c,
                    Target::NextYearPayments => c - c0,
                };
            }
            total
        })
        .collect();
    Ok(Prediction { sample: PredictiveSample::new("uniform", values), diagnostics: Diagnostics::default() })
}

/// How the Unifnorm variance weights each row's latest cumulative value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnifnormVariance {
    /// `C²`, the dimensionally consistent form.
    #[default]
    Squared,
    /// `C` to the first power, as literally printed in the source formula.
    Literal,
}

/// Closed-form mean and variance of the Uniform method's target.
pub fn unifnorm_moments(
    upper: &Triangle,
    target: Target,
    variance: UnifnormVariance,
) -> Result<(f64, f64, bool), ResamplingError> {
    let pool = FactorPool::from_triangle(upper)?;
    let n = upper.n();
    let diag = upper.to_cumulative().latest_diagonal();
    let mut mean = 0.0;
    let mut var = 0.0;
    for (i, &c) in diag.iter().enumerate() {
        let cols = projection_columns(n, i, target);
        if i == 0 && target == Target::NextYearPayments {
            continue;
        }
        let prod_mean: f64 = cols.clone().map(|j| pool.mean(j)).product();
        let prod_sq: f64 = cols.map(|j| pool.mean_sq(j)).product();
        mean += match target {
            Target::UltimateClaim => c * prod_mean,
            Target::NextYearPayments => c * (prod_mean - 1.0),
        };
        let weight = match variance {
            UnifnormVariance::Squared => c * c,
            UnifnormVariance::Literal => c,
        };
        var += weight * (prod_sq - prod_mean * prod_mean);
    }
    let clamped = var < 0.0;
    Ok((mean, var.max(0.0), clamped))
}

/// Unifnorm method: a normal distribution with the Uniform method's mean and
/// variance.
pub fn unifnorm_predict<R: Rng + ?Sized>(
    upper: &Triangle,
    m: usize,
    target: Target,
    variance: UnifnormVariance,
    rng: &mut R,
) -> Result<Prediction, ResamplingError> {
    if m == 0 {
        return Err(ResamplingError::ZeroSamples);
    }
    let (mean, var, clamped) = unifnorm_moments(upper, target, variance)?;
    let sd = var.sqrt();
    let values = (0..m).map(|_| sampling::normal(rng, mean, sd)).collect();
    let diagnostics = Diagnostics { clamped_variances: u64::from(clamped), ..Diagnostics::default() };
    Ok(Prediction { sample: PredictiveSample::new("unifnorm", values), diagnostics })
}
