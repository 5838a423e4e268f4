use rayon::ThreadPoolBuilder;
use reserve_core::resampling::{bootstrap_predict, unifnorm_predict, uniform_predict};
use reserve_core::{
    fit, generate_scenario, stream, BootstrapConfig, Flavor, ModelKind, ModelParams, ParametricPredictor, Target,
    Triangle, UnifnormVariance, VariancePower,
};
use statrs::distribution::{ContinuousCDF, LogNormal};

fn params(json: &str) -> ModelParams {
    serde_json::from_str(json).unwrap()
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mean = x.iter().sum::<f64>() / m;
    (mean, x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0))
}

fn raa() -> Triangle {
    let text = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/raa.csv")).unwrap();
    reserve_core::parse_csv(&text, Flavor::Cumulative, Default::default()).unwrap()
}

#[test]
fn log_normal_row_ultimate_passes_ks() {
    let p = params(r#"{"model": "log_normal", "mu": [0.0, 0.3], "sigma2": [0.0, 0.25]}"#);
    let upper = Triangle::from_rows(&[vec![5.0, 6.0], vec![4.0]], Flavor::Cumulative).unwrap();
    let pred = ParametricPredictor::new(&p, &upper, Target::UltimateClaim).unwrap();
    let mut x = pred.sample(5000, &mut stream(11, &[]));
    x.sort_by(f64::total_cmp);
    // Ultimate = 6 + 4 * LN(0.3, 0.25).
    let law = LogNormal::new(0.3, 0.5).unwrap();
    let m = x.len() as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let f = law.cdf((v - 6.0) / 4.0);
            (f - k as f64 / m).abs().max((f - (k + 1) as f64 / m).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.63 / m.sqrt(), "KS distance {d}");
}

#[test]
fn neg_binomial_mean_follows_chain_ladder() {
    let t = raa();
    let p = fit(ModelKind::NegBinomial, &t).unwrap();
    let x = ParametricPredictor::new(&p, &t, Target::UltimateClaim).unwrap().sample(20_000, &mut stream(3, &[]));
    let (mean, var) = mean_var(&x);
    let cl = reserve_core::fit_chain_ladder(&t).unwrap();
    let diag = t.latest_diagonal();
    let n = t.n();
    let expected: f64 = (0..n).map(|i| diag[i] * cl.dev.f()[n - 1 - i..].iter().product::<f64>()).sum();
    assert!((mean - expected).abs() < 4.0 * (var / x.len() as f64).sqrt(), "{mean} vs {expected}");
}

#[test]
fn poisson_ultimate_variance_equals_lower_mean() {
    let p = params(r#"{"model": "poisson", "mu": [400, 500, 600, 700], "gamma": [0.4, 0.3, 0.2, 0.1]}"#);
    let upper = generate_scenario(&p, &mut stream(5, &[])).upper;
    let x = ParametricPredictor::new(&p, &upper, Target::UltimateClaim).unwrap().sample(40_000, &mut stream(6, &[]));
    let (mean, var) = mean_var(&x);
    let observed: f64 = upper.rows().flatten().sum();
    let lower = 500.0 * 0.1 + 600.0 * 0.3 + 700.0 * 0.6;
    assert!((mean - observed - lower).abs() < 4.0 * (lower / x.len() as f64).sqrt());
    assert!((var / lower - 1.0).abs() < 0.03, "variance {var} vs {lower}");
}

#[test]
fn pattern_estimate_is_consistent() {
    let gamma = [0.35, 0.25, 0.2, 0.12, 0.08];
    let p = params(
        r#"{"model": "poisson", "mu": [1e8, 1.2e8, 0.9e8, 1.1e8, 1e8], "gamma": [0.35, 0.25, 0.2, 0.12, 0.08]}"#,
    );
    let upper = generate_scenario(&p, &mut stream(9, &[])).upper;
    let ModelParams::Poisson { pattern, .. } = fit(ModelKind::Poisson, &upper).unwrap() else { panic!() };
    for (g, h) in gamma.iter().zip(pattern.values()) {
        assert!((h / g - 1.0).abs() < 0.05, "{h} vs {g}");
    }
}

#[test]
fn gamma_fit_recovers_shape() {
    let p = params(
        r#"{"model": "gamma", "mu": [1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000], "gamma": [0.2, 0.15, 0.12, 0.1, 0.09, 0.08, 0.07, 0.06, 0.05, 0.04, 0.03, 0.01], "nu": 4.0}"#,
    );
    let fitted: Vec<f64> = (0..200)
        .map(|s| {
            let upper = generate_scenario(&p, &mut stream(21, &[s])).upper;
            match fit(ModelKind::Gamma, &upper).unwrap() {
                ModelParams::Gamma { nu, .. } => nu,
                _ => unreachable!(),
            }
        })
        .collect();
    let (mean, _) = mean_var(&fitted);
    // ν is estimated as 1/φ, which is biased upward on small triangles.
    assert!(mean > 3.0 && mean < 6.0, "mean fitted shape {mean}");
}

#[test]
fn bootstrap_ignores_thread_count() {
    let t = raa().to_incremental();
    let cfg = BootstrapConfig::new(500, VariancePower::Gamma);
    let run = |threads| {
        ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bootstrap_predict(&t, &cfg, Target::UltimateClaim, &mut stream(77, &[])).unwrap())
    };
    assert_eq!(run(1).sample.values(), run(4).sample.values());
}

#[test]
fn bootstrap_centres_on_chain_ladder() {
    let t = raa();
    let cfg = BootstrapConfig::new(4000, VariancePower::Odp);
    let p = bootstrap_predict(&t, &cfg, Target::UltimateClaim, &mut stream(8, &[])).unwrap();
    let (mean, var) = mean_var(p.sample.values());
    assert!((mean - 213_122.23).abs() < 4.0 * (var / 4000.0).sqrt(), "{mean}");
    assert_eq!(p.diagnostics.replicate_failures, 0);
}

#[test]
fn unifnorm_mean_matches_uniform() {
    let t = raa();
    let u = uniform_predict(&t, 40_000, Target::UltimateClaim, &mut stream(1, &[])).unwrap();
    let v =
        unifnorm_predict(&t, 40_000, Target::UltimateClaim, UnifnormVariance::Squared, &mut stream(2, &[])).unwrap();
    let (mu, vu) = mean_var(u.sample.values());
    let (mv, vv) = mean_var(v.sample.values());
    assert!((mu - mv).abs() < 4.0 * ((vu + vv) / 40_000.0).sqrt(), "{mu} vs {mv}");
    assert!(vv > 0.0);
}

#[test]
fn next_year_target_is_smaller_than_reserve() {
    let t = raa();
    let ult = uniform_predict(&t, 2000, Target::UltimateClaim, &mut stream(4, &[])).unwrap();
    let next = uniform_predict(&t, 2000, Target::NextYearPayments, &mut stream(4, &[])).unwrap();
    let paid: f64 = t.latest_diagonal().iter().sum();
    assert!(next.sample.mean() > 0.0);
    assert!(next.sample.mean() < ult.sample.mean() - paid);
}
