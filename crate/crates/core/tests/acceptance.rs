//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Seeds are fixed constants.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use reserve_core::chainladder::{estimate_dev_factors, payout_pattern};
use reserve_core::examples::{analytic_msep, run_example, ActuaryKind, ExampleReport, MsepReference, Setting};
use reserve_core::harness::{
    emit_report, run_study_with_threads, Method, MethodReport, Preset, ScenarioOutcome, StudyConfig, StudyReport,
};
use reserve_core::rng::stream;
use reserve_core::scoring::{crps, energy_score, HistogramBin, PredictiveSample};
use reserve_core::triangle::{parse_csv, CsvOptions, Flavor, Triangle};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const EXAMPLE_SEED: u64 = 1;
const EXAMPLE_SIMS: usize = 10_000;
const EXAMPLE_DRAWS: usize = 1000;

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check { failures: Vec::new(), notes: Vec::new() }
    }

    fn expect(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }
}

fn example(setting: Setting) -> &'static ExampleReport {
    static EX1: OnceLock<ExampleReport> = OnceLock::new();
    static EX2: OnceLock<ExampleReport> = OnceLock::new();
    let cell = match setting {
        Setting::LogNormalEx1 => &EX1,
        Setting::PoissonEx2 => &EX2,
    };
    cell.get_or_init(|| run_example(setting, EXAMPLE_SIMS, EXAMPLE_DRAWS, &mut stream(EXAMPLE_SEED, &[])))
}

fn gamma_config() -> StudyConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/gamma_raa.json");
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let mut cfg = StudyConfig::from_json(&text).expect("valid config");
    cfg.apply_preset(Preset::Desk);
    cfg
}

fn desk_study() -> &'static StudyReport {
    static REPORT: OnceLock<StudyReport> = OnceLock::new();
    REPORT.get_or_init(|| run_study_with_threads(&gamma_config(), 0).expect("desk study runs"))
}

fn method(r: &StudyReport, m: Method) -> &MethodReport {
    r.method(m).expect("method present")
}

fn crps_of(r: &StudyReport, m: Method) -> f64 {
    method(r, m).mean_crps.expect("at least one success")
}

fn coverage(r: &StudyReport, m: Method, idx: usize) -> f64 {
    method(r, m).coverage[idx].coverage_pct
}

fn chi_square_p(bins: &[HistogramBin]) -> f64 {
    let total: u64 = bins.iter().map(|b| b.count).sum();
    let expected = total as f64 / bins.len() as f64;
    let stat: f64 = bins.iter().map(|b| (b.count as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((bins.len() - 1) as f64).unwrap().cdf(stat)
}

fn criterion_1() -> Check {
    let mut c = Check::new();
    let r = example(Setting::PoissonEx2);
    for (kind, exact) in [
        (ActuaryKind::Ideal, 750.0),
        (ActuaryKind::Intern, 750.0),
        (ActuaryKind::LongTerm, 375_750.0),
        (ActuaryKind::Ordinary, 3_093.75),
    ] {
        c.expect(
            analytic_msep(Setting::PoissonEx2, kind) == MsepReference::Analytic(exact),
            format!("{} analytic {exact}", kind.name()),
        );
        let a = r.actuary(kind);
        let z = (a.msep - exact) / a.msep_std_error;
        c.expect(z.abs() <= 3.0, format!("{} MC {:.1} ({z:+.2} SE)", kind.name(), a.msep));
    }
    c
}

fn criterion_2() -> Check {
    let mut c = Check::new();
    let ex2 = example(Setting::PoissonEx2);
    let s2 = |k| ex2.actuary(k).mean_crps;
    let (i, l, o, n) =
        (s2(ActuaryKind::Ideal), s2(ActuaryKind::LongTerm), s2(ActuaryKind::Ordinary), s2(ActuaryKind::Intern));
    c.expect(
        i > n && n > o && o > l,
        format!("ex2 order ideal {i:.2} > intern {n:.2} > ordinary {o:.2} > long-term {l:.2}"),
    );
    for (kind, v, reference) in [
        (ActuaryKind::Ideal, i, -14.49),
        (ActuaryKind::Intern, n, -14.64),
        (ActuaryKind::Ordinary, o, -32.62),
        (ActuaryKind::LongTerm, l, -327.62),
    ] {
        let rel = (v - reference).abs() / reference.abs();
        c.expect(rel <= 0.05, format!("ex2 {} {v:.2} vs {reference} ({:.1}%)", kind.name(), 100.0 * rel));
    }
    let ex1 = example(Setting::LogNormalEx1);
    let s1 = |k| ex1.actuary(k).mean_crps;
    let (i, l, o, n) =
        (s1(ActuaryKind::Ideal), s1(ActuaryKind::LongTerm), s1(ActuaryKind::Ordinary), s1(ActuaryKind::Intern));
    c.expect(
        i > o && o > l && o > n,
        format!("ex1 order ideal {i:.3} > ordinary {o:.3} > {{long-term {l:.3}, intern {n:.3}}}"),
    );
    c
}

fn criterion_3() -> Check {
    let mut c = Check::new();
    for (setting, targets) in [(Setting::LogNormalEx1, [67.0, 90.5]), (Setting::PoissonEx2, [66.2, 89.5])] {
        let ideal = example(setting).actuary(ActuaryKind::Ideal);
        for (iv, target) in ideal.intervals.iter().zip(targets) {
            c.expect(
                (iv.coverage_pct - target).abs() <= 2.0,
                format!("{setting} ideal {:.0}% coverage {:.2} vs {target}", iv.level * 100.0, iv.coverage_pct),
            );
        }
    }
    let intern = example(Setting::LogNormalEx1).actuary(ActuaryKind::Intern).intervals[0].coverage_pct;
    c.expect(intern < 55.0, format!("ex1 intern 66% coverage {intern:.2} < 55"));
    c
}

fn criterion_4() -> Check {
    let mut c = Check::new();
    let r = desk_study();
    let ideal = crps_of(r, Method::Ideal);
    let others: Vec<(Method, f64)> =
        r.methods.iter().filter(|m| m.method != Method::Ideal).map(|m| (m.method, m.mean_crps.unwrap())).collect();
    let best_other =
        others.iter().copied().fold((Method::Ideal, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let worst = others.iter().copied().fold((Method::Ideal, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    c.expect(ideal > best_other.1, format!("(a) ideal {ideal:.0} highest"));
    c.expect(
        best_other.0 == Method::Gamma,
        format!("(b) best non-ideal is {} {:.0} (gamma {:.0})", best_other.0, best_other.1, crps_of(r, Method::Gamma)),
    );
    c.expect(worst.0 == Method::Unifnorm, format!("(c) worst is {} {:.0}", worst.0, worst.1));
    let (bg, bo) = (crps_of(r, Method::BootstrapGamma), crps_of(r, Method::BootstrapOdp));
    let rel = (bg - bo).abs() / bo.abs().max(bg.abs());
    c.expect(rel <= 0.05, format!("(d) bootstrap gamma {bg:.0} vs odp {bo:.0} ({:.1}%)", 100.0 * rel));
    c
}

fn criterion_5() -> Check {
    let mut c = Check::new();
    let r = desk_study();
    for (idx, target) in [(0, 66.67), (1, 90.0)] {
        let v = coverage(r, Method::Ideal, idx);
        c.expect((v - target).abs() <= 4.0, format!("ideal coverage {v:.1} vs {target}"));
    }
    for m in [Method::NegBinomial, Method::Poisson] {
        let v = coverage(r, m, 1);
        c.expect(v < 10.0, format!("{m} 90% coverage {v:.1} < 10"));
    }
    for m in [Method::BootstrapGamma, Method::BootstrapOdp] {
        let v = coverage(r, m, 1);
        c.expect(v > 95.0, format!("{m} 90% coverage {v:.1} > 95"));
    }
    c
}

fn brute_crps(x: &[f64], obs: f64) -> f64 {
    let m = x.len() as f64;
    let mut pair = 0.0;
    for a in x {
        for b in x {
            pair += (a - b).abs();
        }
    }
    0.5 * pair / (m * m) - x.iter().map(|v| (v - obs).abs()).sum::<f64>() / m
}

fn random_triangle<R: Rng>(rng: &mut R, n: usize) -> Triangle {
    Triangle::upper_from_fn(n, Flavor::Incremental, |_, _| (rng.random_range(1.0..1000.0_f64) * 100.0).round() / 100.0)
}

fn criterion_6() -> Check {
    let mut c = Check::new();
    let mut rng = stream(6, &[]);

    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let m = rng.random_range(1..300);
        let scale = 10f64.powi(rng.random_range(-2..5));
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let obs = rng.random_range(-1.5..1.5) * scale;
        let fast = crps(&PredictiveSample::new("p", x.clone()), obs);
        worst = worst.max((fast - brute_crps(&x, obs)).abs() / scale.max(1.0));
    }
    c.expect(worst <= 1e-9, format!("crps fast path vs O(M^2) oracle, 200 cases, max err {worst:.1e}"));

    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let m = rng.random_range(1..200);
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let obs = rng.random_range(-1.0..11.0);
        let s = PredictiveSample::new("p", x);
        worst = worst.max((energy_score(&s, obs, 1.0, 0, &mut rng) - crps(&s, obs)).abs());
    }
    c.expect(worst <= 1e-12, format!("energy(beta=1) vs crps, max err {worst:.1e}"));

    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let n = rng.random_range(2..15);
        let t = random_triangle(&mut rng, n);
        let g = payout_pattern(&estimate_dev_factors(&t).expect("positive triangle"));
        worst = worst.max((g.values().iter().sum::<f64>() - 1.0).abs());
    }
    c.expect(worst <= 1e-12, format!("payout pattern sum, max err {worst:.1e}"));

    let mut ok = true;
    for _ in 0..200 {
        let n = rng.random_range(2..15);
        let t = random_triangle(&mut rng, n);
        let back = parse_csv(t.to_csv().as_bytes(), Flavor::Incremental, CsvOptions::default());
        ok &= back.is_ok_and(|b| b == t);
    }
    c.expect(ok, "triangle csv round trip, 200 cases".into());

    let p_study = chi_square_p(&method(desk_study(), Method::Ideal).pit_histogram);
    c.expect(p_study > 0.001, format!("ideal PIT chi-square (study, N=200) p={p_study:.3}"));
    let p_ex1 = chi_square_p(&example(Setting::LogNormalEx1).actuary(ActuaryKind::Ideal).pit_histogram);
    c.expect(p_ex1 > 0.001, format!("ideal PIT chi-square (ex1, 10000 sims) p={p_ex1:.3}"));

    let mut cfg = gamma_config();
    cfg.n_scenarios = 12;
    cfg.m_draws = 300;
    let one = run_study_with_threads(&cfg, 1).expect("study");
    let four = run_study_with_threads(&cfg, 4).expect("study");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    emit_report(&one, dirs[0].path()).unwrap();
    emit_report(&four, dirs[1].path()).unwrap();
    let same = ["summary.json", "scores.csv", "pit.csv", "ppcurve.csv", "coverage.csv"]
        .iter()
        .all(|f| std::fs::read(dirs[0].path().join(f)).unwrap() == std::fs::read(dirs[1].path().join(f)).unwrap());
    c.expect(same, "reports byte-identical for 1 and 4 threads".into());
    c
}

fn criterion_7() -> Check {
    let mut c = Check::new();
    let ideal = method(desk_study(), Method::Ideal);
    let ratios: Vec<f64> = ideal
        .scenarios
        .iter()
        .filter_map(|s| match s {
            ScenarioOutcome::Scored { score, .. } => Some(score.msep.bias_part / score.msep.variance_part),
            ScenarioOutcome::Failed { .. } => None,
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    c.expect(
        ratios.len() == 200 && mean < 1e-3,
        format!("ideal bias/variance mean {mean:.2e} over {} scenarios", ratios.len()),
    );
    c
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("example 2 MSEP matches closed forms", criterion_1),
        ("example CRPS ordering and values", criterion_2),
        ("example coverage", criterion_3),
        ("gamma case study ordering (desk scale)", criterion_4),
        ("gamma case study calibration signatures", criterion_5),
        ("property suite", criterion_6),
        ("MSEP reduction for the ideal method", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let check = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if check.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {}: {name} [{secs:.1}s]", i + 1);
        for f in &check.failures {
            println!("    failed: {f}");
        }
        for n in &check.notes {
            println!("    ok: {n}");
        }
        if !check.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
