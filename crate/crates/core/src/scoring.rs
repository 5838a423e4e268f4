//! Evaluation of predictive samples against realized values: CRPS, energy
//! score, PIT, P-P curves, central-interval coverage and width, and the
//! conditional MSEP approximation.
//!
//! Scores are negatively oriented: larger is better and every value is `<= 0`.

use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Empirical predictive distribution represented by `M` draws.
#[derive(Debug, Clone)]
pub struct PredictiveSample {
    values: Vec<f64>,
    sorted: OnceLock<Vec<f64>>,
    method_id: String,
}

impl PredictiveSample {
    pub fn new(method_id: impl Into<String>, values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()), "non-finite predictive draw");
        PredictiveSample { values, sorted: OnceLock::new(), method_id: method_id.into() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Ascending copy, computed on first use.
    pub fn sorted(&self) -> &[f64] {
        self.sorted.get_or_init(|| {
            let mut s = self.values.clone();
            s.sort_unstable_by(f64::total_cmp);
            s
        })
    }

    pub fn method_id(&self) -> &str {
        &self.method_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Empirical `q`-quantile as the order statistic of rank `ceil(q M)`,
    /// clamped to `[1, M]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let s = self.sorted();
        let m = s.len();
        // Absorb representation error in q·M (0.95·100 must select rank 95).
        let rank = (q * m as f64 - 1e-9).ceil().clamp(1.0, m as f64) as usize;
        s[rank - 1]
    }
}

/// `CRPS(F, c) = ½ E|X - X'| - E|X - c|` for the empirical distribution of
/// `sample`, evaluated over all `M²` pairs in `O(M log M)` via order
/// statistics: `Σ_{i,j} |x_i - x_j| = 2 Σ_k (2k - M - 1) x_(k)`.
pub fn crps(sample: &PredictiveSample, obs: f64) -> f64 {
    let s = sample.sorted();
    let m = s.len() as f64;
    let mut pair_sum = 0.0;
    let mut obs_sum = 0.0;
    for (k, &x) in s.iter().enumerate() {
        pair_sum += (2.0 * (k as f64 + 1.0) - m - 1.0) * x;
        obs_sum += (x - obs).abs();
    }
    let mean_pair = 2.0 * pair_sum / (m * m);
    0.5 * mean_pair - obs_sum / m
}

/// Number of index pairs used for `E|X - X'|^β`: exhaustive for `M <= 2000`,
/// `10 M` sampled pairs above.
pub fn default_energy_pairs(m: usize) -> usize {
    if m > 2000 {
        10 * m
    } else {
        0
    }
}

#[inline]
fn abs_pow(d: f64, beta: f64) -> f64 {
    let d = d.abs();
    if beta == 1.0 {
        d
    } else if beta == 0.5 {
        d.sqrt()
    } else {
        d.powf(beta)
    }
}

/// One-dimensional energy score `½ E|X - X'|^β - E|X - c|^β`.
///
/// `E|X - c|^β` is exact over all draws. `E|X - X'|^β` is exact over all `M²`
/// ordered pairs when `pairs == 0`; otherwise it is estimated from `pairs`
/// random pairs with distinct indices and rescaled by `(M-1)/M` so both
/// modes estimate the same empirical quantity.
pub fn energy_score<R: Rng + ?Sized>(sample: &PredictiveSample, obs: f64, beta: f64, pairs: usize, rng: &mut R) -> f64 {
    assert!(beta > 0.0 && beta < 2.0, "energy score exponent must lie in (0, 2)");
    let x = sample.values();
    let m = x.len();
    let obs_term = x.iter().map(|&v| abs_pow(v - obs, beta)).sum::<f64>() / m as f64;
    let pair_term = if pairs == 0 {
        let mut total = 0.0;
        for i in 0..m {
            let xi = x[i];
            let mut row = 0.0;
            for &xj in &x[i + 1..] {
                row += abs_pow(xi - xj, beta);
            }
            total += row;
        }
        2.0 * total / (m as f64 * m as f64)
    } else if m < 2 {
        0.0
    } else {
        let mut total = 0.0;
        for _ in 0..pairs {
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            total += abs_pow(x[i] - x[j], beta);
        }
        total / pairs as f64 * (m as f64 - 1.0) / m as f64
    };
    0.5 * pair_term - obs_term
}

/// Probability integral transform of `obs` under the empirical distribution.
///
/// Non-randomized: `F(obs) = #{x <= obs} / M`. Randomized: uniform on
/// `[F(obs-), F(obs)]`, which spreads ties for discrete forecasts.
pub fn pit<R: Rng + ?Sized>(sample: &PredictiveSample, obs: f64, randomize: bool, rng: &mut R) -> f64 {
    let s = sample.sorted();
    let m = s.len() as f64;
    let below = s.partition_point(|&x| x < obs) as f64;
    let at_or_below = s.partition_point(|&x| x <= obs) as f64;
    if randomize && at_or_below > below {
        let u: f64 = rng.random();
        (below + u * (at_or_below - below)) / m
    } else {
        at_or_below / m
    }
}

/// Outcome of one central prediction interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalOutcome {
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub covered: bool,
    pub width: f64,
}

/// Central `level` interval from the `(1 - level)/2` and `(1 + level)/2`
/// empirical quantiles; coverage uses strict inequalities on both ends.
pub fn coverage_and_width(sample: &PredictiveSample, obs: f64, level: f64) -> IntervalOutcome {
    let lower = sample.quantile((1.0 - level) / 2.0);
    let upper = sample.quantile((1.0 + level) / 2.0);
    IntervalOutcome { level, lower, upper, covered: lower < obs && obs < upper, width: upper - lower }
}

/// For each grid probability, whether `obs` lies strictly below the
/// sample's quantile at that probability.
pub fn pp_below(sample: &PredictiveSample, obs: f64, grid: &[f64]) -> Vec<bool> {
    grid.iter().map(|&p| obs < sample.quantile(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpPoint {
    pub p: f64,
    pub fraction: f64,
}

/// P-P curve from per-scenario indicator vectors produced by [`pp_below`].
pub fn pp_curve_from_indicators<'a>(indicators: impl IntoIterator<Item = &'a [bool]>, grid: &[f64]) -> Vec<PpPoint> {
    let mut counts = vec![0usize; grid.len()];
    let mut n = 0usize;
    for row in indicators {
        n += 1;
        for (c, &b) in counts.iter_mut().zip(row) {
            *c += usize::from(b);
        }
    }
    grid.iter()
        .zip(counts)
        .map(|(&p, c)| PpPoint { p, fraction: if n == 0 { 0.0 } else { c as f64 / n as f64 } })
        .collect()
}

/// P-P curve: for each grid `p`, the fraction of scenarios whose realized
/// value is strictly below that scenario's empirical `p`-quantile.
pub fn pp_curve(scenarios: &[(&PredictiveSample, f64)], grid: &[f64]) -> Vec<PpPoint> {
    let rows: Vec<Vec<bool>> = scenarios.iter().map(|(s, obs)| pp_below(s, *obs, grid)).collect();
    pp_curve_from_indicators(rows.iter().map(Vec::as_slice), grid)
}

/// Evenly spaced grid `1/k, 2/k, ..., (k-1)/k`.
pub fn uniform_grid(k: usize) -> Vec<f64> {
    (1..k).map(|i| i as f64 / k as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: u64,
}

/// Equal-width histogram of PIT values on `[0, 1]`; a PIT of exactly 1 falls
/// in the last bin.
pub fn pit_histogram(pits: &[f64], bins: usize) -> Vec<HistogramBin> {
    assert!(bins >= 1, "histogram needs at least one bin");
    let mut counts = vec![0u64; bins];
    for &u in pits {
        let b = ((u * bins as f64).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            bin_left: b as f64 / bins as f64,
            bin_right: (b + 1) as f64 / bins as f64,
            count,
        })
        .collect()
}

/// Conditional MSEP decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Msep {
    pub value: f64,
    pub variance_part: f64,
    pub bias_part: f64,
}

/// `Σ (z_i - z̄)² / (M - 1) + (ȳ - z̄)²`, where `z` is drawn with the true
/// parameters and approximates `E(UC | D)` by its mean.
pub fn msep_conditional(pred: &PredictiveSample, oracle: &PredictiveSample) -> Msep {
    let z = oracle.values();
    let z_bar = oracle.mean();
    let variance_part = z.iter().map(|v| (v - z_bar) * (v - z_bar)).sum::<f64>() / (z.len() as f64 - 1.0);
    let bias = pred.mean() - z_bar;
    let bias_part = bias * bias;
    Msep { value: variance_part + bias_part, variance_part, bias_part }
}

/// Everything measured for one (scenario, method) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScore {
    pub crps: f64,
    pub energy: f64,
    pub pit: f64,
    pub intervals: Vec<IntervalOutcome>,
    pub msep: Msep,
}

/// Settings shared by every scored pair in a study.
#[derive(Debug, Clone)]
pub struct ScoringOptions {
    pub energy_beta: f64,
    /// `None` selects [`default_energy_pairs`].
    pub energy_pairs: Option<usize>,
    pub levels: Vec<f64>,
}

pub fn score_scenario<R: Rng + ?Sized>(
    sample: &PredictiveSample,
    obs: f64,
    oracle: &PredictiveSample,
    randomize_pit: bool,
    opts: &ScoringOptions,
    rng: &mut R,
) -> ScenarioScore {
    let pairs = opts.energy_pairs.unwrap_or_else(|| default_energy_pairs(sample.len()));
    ScenarioScore {
        crps: crps(sample, obs),
        energy: energy_score(sample, obs, opts.energy_beta, pairs, rng),
        pit: pit(sample, obs, randomize_pit, rng),
        intervals: opts.levels.iter().map(|&l| coverage_and_width(sample, obs, l)).collect(),
        msep: msep_conditional(sample, oracle),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn sample(v: &[f64]) -> PredictiveSample {
        PredictiveSample::new("t", v.to_vec())
    }

    #[test]
    fn crps_point_mass_at_obs_is_zero() {
        assert_eq!(crps(&sample(&[3.0; 5]), 3.0), 0.0);
    }

    #[test]
    fn crps_two_point_example() {
        assert!((crps(&sample(&[0.0, 2.0]), 1.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn energy_two_point_example() {
        let e = energy_score(&sample(&[0.0, 2.0]), 1.0, 0.5, 0, &mut stream(0, &[]));
        let expected = 0.5 * (2.0f64.sqrt() / 2.0) - 1.0;
        assert!((e - expected).abs() < 1e-15, "{e}");
        assert!((e + 0.646_446_609).abs() < 1e-9);
    }

    #[test]
    fn energy_point_mass_is_zero() {
        let s = sample(&[4.0; 6]);
        for beta in [0.3, 0.5, 1.0, 1.7] {
            assert_eq!(energy_score(&s, 4.0, beta, 0, &mut stream(0, &[])), 0.0);
        }
    }

    #[test]
    fn sampled_energy_tracks_exhaustive() {
        let mut rng = stream(9, &[]);
        let v: Vec<f64> = (0..400).map(|_| rng.random::<f64>() * 100.0).collect();
        let s = sample(&v);
        let exact = energy_score(&s, 40.0, 0.5, 0, &mut rng);
        let approx = energy_score(&s, 40.0, 0.5, 200_000, &mut rng);
        assert!((exact - approx).abs() < 0.01 * exact.abs(), "{exact} vs {approx}");
    }

    #[test]
    fn pit_extremes() {
        let s = sample(&[1.0, 2.0, 3.0]);
        let mut rng = stream(0, &[]);
        assert_eq!(pit(&s, 0.5, false, &mut rng), 0.0);
        assert_eq!(pit(&s, 3.5, false, &mut rng), 1.0);
    }

    #[test]
    fn randomized_pit_spreads_ties() {
        let s = sample(&[1.0, 1.0, 5.0, 5.0, 5.0, 7.0, 8.0, 9.0, 9.0, 10.0]);
        let mut rng = stream(1, &[]);
        for _ in 0..200 {
            let u = pit(&s, 5.0, true, &mut rng);
            assert!((0.2..=0.5).contains(&u), "{u}");
        }
        assert_eq!(pit(&s, 5.0, false, &mut rng), 0.5);
    }

    #[test]
    fn coverage_example() {
        let s = sample(&(1..=100).map(f64::from).collect::<Vec<_>>());
        let o = coverage_and_width(&s, 50.0, 0.90);
        assert_eq!((o.lower, o.upper), (5.0, 95.0));
        assert!(o.covered);
        assert_eq!(o.width, 90.0);
        assert!(!coverage_and_width(&s, 5.0, 0.90).covered);
        let c = coverage_and_width(&sample(&[2.0; 10]), 2.0, 0.9);
        assert_eq!(c.width, 0.0);
        assert!(!c.covered);
    }

    #[test]
    fn quantile_is_clamped() {
        let s = sample(&[3.0, 1.0, 2.0]);
        assert_eq!(s.quantile(0.0), 1.0);
        assert_eq!(s.quantile(1.0), 3.0);
        assert_eq!(s.quantile(0.5), 2.0);
    }

    #[test]
    fn pp_curve_all_above_is_zero() {
        let a = sample(&[1.0, 2.0, 3.0]);
        let b = sample(&[0.0, 1.0]);
        let curve = pp_curve(&[(&a, 10.0), (&b, 10.0)], &uniform_grid(10));
        assert!(curve.iter().all(|p| p.fraction == 0.0));
    }

    #[test]
    fn histogram_bins() {
        let h = pit_histogram(&[0.0, 0.05, 0.5, 0.99, 1.0], 4);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 0, 1, 2]);
        assert_eq!(h[1].bin_left, 0.25);
        assert_eq!(h[3].bin_right, 1.0);
    }

    #[test]
    fn msep_identical_samples_has_no_bias() {
        let z = sample(&[1.0, 4.0, 2.0, 8.0]);
        let m = msep_conditional(&z, &z);
        assert_eq!(m.bias_part, 0.0);
        let mean = 15.0 / 4.0;
        let var = [1.0, 4.0, 2.0, 8.0].iter().map(|v: &f64| (v - mean).powi(2)).sum::<f64>() / 3.0;
        assert!((m.value - var).abs() < 1e-12);
    }

    #[test]
    fn msep_constant_samples() {
        let m = msep_conditional(&sample(&[5.0; 3]), &sample(&[2.0; 3]));
        assert_eq!(m.variance_part, 0.0);
        assert_eq!(m.value, 9.0);
    }
}
