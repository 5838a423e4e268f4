//! Chain-ladder estimators shared by the parametric models and the bootstrap:
//! development factors, payout pattern, row levels, Pearson residuals and the
//! dispersion parameter.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::triangle::{Flavor, Triangle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainLadderError {
    #[error("development column {0} has a non-positive cumulative sum")]
    DegenerateColumn(usize),
    #[error("payout pattern gives row {0} a non-positive observed share")]
    DegeneratePattern(usize),
    #[error("dispersion needs n >= 3 (zero degrees of freedom at n = {n})")]
    DegenerateDispersion { n: usize },
    #[error("fitted value at ({row}, {col}) is not positive")]
    NonPositiveFit { row: usize, col: usize },
    #[error("invalid payout pattern: {0}")]
    InvalidPattern(String),
}

/// Chain-ladder ratios. `p[j] = 1 / f[j]`; the law of `C_{j+1}` given `C_j`
/// has mean `C_j f[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DevFactors {
    p: Vec<f64>,
    f: Vec<f64>,
}

impl DevFactors {
    pub fn from_p(p: Vec<f64>) -> Self {
        let f = p.iter().map(|&x| 1.0 / x).collect();
        DevFactors { p, f }
    }

    /// Ratios implied by a payout pattern: `p[j] = β_j / β_{j+1}` where `β`
    /// are the partial sums of the pattern.
    pub fn from_pattern(pattern: &PayoutPattern) -> Result<Self, ChainLadderError> {
        let beta = pattern.cumulative();
        let mut p = Vec::with_capacity(beta.len() - 1);
        for j in 0..beta.len() - 1 {
            if !(beta[j + 1] > 0.0) {
                return Err(ChainLadderError::InvalidPattern(format!("partial sum {} is not positive", j + 1)));
            }
            p.push(beta[j] / beta[j + 1]);
        }
        Ok(Self::from_p(p))
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    /// Triangle dimension these factors belong to.
    pub fn n(&self) -> usize {
        self.p.len() + 1
    }
}

/// Fractions of a row's ultimate paid in each development year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PayoutPattern(Vec<f64>);

impl PayoutPattern {
    /// Tolerance on `Σγ = 1` for user-supplied patterns.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(gamma: Vec<f64>) -> Result<Self, ChainLadderError> {
        Self::check_entries(&gamma)?;
        let s: f64 = gamma.iter().sum();
        if (s - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(ChainLadderError::InvalidPattern(format!("entries sum to {s}, not 1")));
        }
        Ok(PayoutPattern(gamma))
    }

    /// Rescales `gamma` to sum to one and returns the factor removed, so a
    /// caller can move it onto the row levels and keep every `μ_i γ_j`.
    pub fn normalized(gamma: Vec<f64>) -> Result<(Self, f64), ChainLadderError> {
        Self::check_entries(&gamma)?;
        let s: f64 = gamma.iter().sum();
        if !(s > 0.0) {
            return Err(ChainLadderError::InvalidPattern("entries sum to zero".into()));
        }
        if (s - 1.0).abs() <= Self::SUM_TOLERANCE {
            return Ok((PayoutPattern(gamma), 1.0));
        }
        Ok((PayoutPattern(gamma.into_iter().map(|g| g / s).collect()), s))
    }

    fn check_entries(gamma: &[f64]) -> Result<(), ChainLadderError> {
        if gamma.len() < 2 {
            return Err(ChainLadderError::InvalidPattern("need at least 2 entries".into()));
        }
        if let Some(g) = gamma.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(ChainLadderError::InvalidPattern(format!("entry {g} is negative or non-finite")));
        }
        Ok(())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Partial sums `β_j = γ_0 + ... + γ_j`.
    pub fn cumulative(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, &g| {
                *acc += g;
                Some(*acc)
            })
            .collect()
    }
}

/// Pearson residual variance function: `Var(x) ∝ m^power`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariancePower {
    /// Over-dispersed Poisson, `Var = φ m`.
    Odp,
    /// Gamma, `Var = φ m²`.
    Gamma,
}

impl VariancePower {
    #[inline]
    pub fn exponent(self) -> f64 {
        match self {
            VariancePower::Odp => 1.0,
            VariancePower::Gamma => 2.0,
        }
    }

    /// `m^(power/2)`, the residual scale.
    #[inline]
    pub fn scale(self, m: f64) -> f64 {
        match self {
            VariancePower::Odp => m.sqrt(),
            VariancePower::Gamma => m,
        }
    }
}

/// Multiplier applied to Pearson residuals before resampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualAdjustment {
    /// `sqrt(n / (N - p))` with `n` the number of accident years.
    #[default]
    Paper,
    /// The usual degrees-of-freedom correction `sqrt(N / (N - p))`.
    Dof,
}

/// Pearson residuals over the upper triangle and the dispersion estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispersion {
    pub phi: f64,
    /// Residuals in row-major order over the `n(n+1)/2` upper cells.
    pub residuals: Vec<f64>,
    pub dof: usize,
    pub n: usize,
}

/// Number of observations `N = n(n+1)/2` and degrees of freedom `N - (2n - 1)`.
pub fn observation_counts(n: usize) -> (usize, isize) {
    let big_n = n * (n + 1) / 2;
    (big_n, big_n as isize - (2 * n as isize - 1))
}

/// Volume-weighted chain-ladder ratios from a cumulative upper triangle
/// (incremental input is accumulated first).
pub fn estimate_dev_factors(t: &Triangle) -> Result<DevFactors, ChainLadderError> {
    let c = t.to_cumulative();
    let n = c.n();
    let mut p = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n - 1 - j {
            num += c.get(i, j);
            den += c.get(i, j + 1);
        }
        if !(num > 0.0) || !(den > 0.0) {
            return Err(ChainLadderError::DegenerateColumn(j));
        }
        p.push(num / den);
    }
    Ok(DevFactors::from_p(p))
}

/// Payout pattern implied by development ratios. Built as differences of
/// the suffix products `β_i = p_i ⋯ p_{n-2}` so the entries telescope to 1.
pub fn payout_pattern(d: &DevFactors) -> PayoutPattern {
    let p = d.p();
    let n = d.n();
    let mut beta = vec![1.0; n];
    for i in (0..n - 1).rev() {
        beta[i] = beta[i + 1] * p[i];
    }
    let mut gamma = Vec::with_capacity(n);
    gamma.push(beta[0]);
    for i in 1..n {
        gamma.push(beta[i] - beta[i - 1]);
    }
    PayoutPattern(gamma)
}

/// Row levels `μ_i = (Σ_{k<n-i} X_ik) / (Σ_{k<n-i} γ_k)`.
pub fn row_levels(t: &Triangle, g: &PayoutPattern) -> Result<Vec<f64>, ChainLadderError> {
    let x = t.to_incremental();
    let n = x.n();
    let beta = g.cumulative();
    (0..n)
        .map(|i| {
            let den = beta[n - 1 - i];
            if !(den > 0.0) {
                return Err(ChainLadderError::DegeneratePattern(i));
            }
            Ok(x.row(i)[..n - i].iter().sum::<f64>() / den)
        })
        .collect()
}

/// Chain-ladder fit `m_ij = μ_i γ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainLadderFit {
    pub dev: DevFactors,
    pub pattern: PayoutPattern,
    pub mu_rows: Vec<f64>,
}

impl ChainLadderFit {
    pub fn n(&self) -> usize {
        self.mu_rows.len()
    }

    #[inline]
    pub fn mean(&self, i: usize, j: usize) -> f64 {
        self.mu_rows[i] * self.pattern.values()[j]
    }

    /// Fitted incremental values on the upper triangle.
    pub fn fitted_upper(&self) -> Triangle {
        Triangle::upper_from_fn(self.n(), Flavor::Incremental, |i, j| self.mean(i, j))
    }
}

pub fn fit_chain_ladder(t: &Triangle) -> Result<ChainLadderFit, ChainLadderError> {
    let dev = estimate_dev_factors(t)?;
    let pattern = payout_pattern(&dev);
    let mu_rows = row_levels(t, &pattern)?;
    Ok(ChainLadderFit { dev, pattern, mu_rows })
}

/// Pearson residuals `(x - m) / m^(q/2)` on every upper cell and
/// `φ = Σ r² / (N - p)`.
pub fn pearson_dispersion(
    t: &Triangle,
    fitted: &Triangle,
    power: VariancePower,
) -> Result<Dispersion, ChainLadderError> {
    let x = t.to_incremental();
    let n = x.n();
    let (_, dof) = observation_counts(n);
    if dof < 1 {
        return Err(ChainLadderError::DegenerateDispersion { n });
    }
    let mut residuals = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in 0..n - i {
            let m = fitted.get(i, j);
            if !(m > 0.0) {
                return Err(ChainLadderError::NonPositiveFit { row: i, col: j });
            }
            residuals.push((x.get(i, j) - m) / power.scale(m));
        }
    }
    let phi = residuals.iter().map(|r| r * r).sum::<f64>() / dof as f64;
    Ok(Dispersion { phi, residuals, dof: dof as usize, n })
}

/// Residual multiplier for the given adjustment rule.
pub fn adjustment_factor(n: usize, adjustment: ResidualAdjustment) -> Result<f64, ChainLadderError> {
    let (big_n, dof) = observation_counts(n);
    if dof < 1 {
        return Err(ChainLadderError::DegenerateDispersion { n });
    }
    let num = match adjustment {
        ResidualAdjustment::Paper => n,
        ResidualAdjustment::Dof => big_n,
    };
    Ok((num as f64 / dof as f64).sqrt())
}

/// Scaled residuals fed to the bootstrap.
pub fn adjust_residuals(d: &Dispersion, adjustment: ResidualAdjustment) -> Result<Vec<f64>, ChainLadderError> {
    let k = adjustment_factor(d.n, adjustment)?;
    Ok(d.residuals.iter().map(|r| r * k).collect())
}
