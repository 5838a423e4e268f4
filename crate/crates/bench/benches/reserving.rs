use criterion::{criterion_group, criterion_main, Criterion};
use reserve_core::resampling::{bootstrap_predict, uniform_predict};
use reserve_core::{
    fit, fit_chain_ladder, generate_scenario, parse_csv, stream, BootstrapConfig, Flavor, ModelKind,
    ParametricPredictor, Target, Triangle, VariancePower,
};
use std::hint::black_box;

fn raa() -> Triangle {
    let text = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/raa.csv")).unwrap();
    parse_csv(&text, Flavor::Cumulative, Default::default()).unwrap()
}

fn reserving(c: &mut Criterion) {
    let t = raa();
    let gen = fit(ModelKind::Gamma, &t).unwrap();

    c.bench_function("chain_ladder_fit", |b| b.iter(|| fit_chain_ladder(black_box(&t)).unwrap()));
    for kind in [ModelKind::LogNormal, ModelKind::Odp, ModelKind::Gamma] {
        c.bench_function(&format!("fit/{}", kind.name()), |b| b.iter(|| fit(kind, black_box(&t)).unwrap()));
    }

    let mut rng = stream(1, &[]);
    c.bench_function("generate_scenario/gamma", |b| b.iter(|| generate_scenario(&gen, &mut rng)));

    let pred = ParametricPredictor::new(&gen, &t, Target::UltimateClaim).unwrap();
    c.bench_function("parametric_sample/gamma/5000", |b| b.iter(|| pred.sample(5000, &mut rng)));

    c.bench_function("uniform/5000", |b| {
        b.iter(|| uniform_predict(&t, 5000, Target::UltimateClaim, &mut rng).unwrap())
    });

    let mut g = c.benchmark_group("bootstrap");
    g.sample_size(10);
    for power in [VariancePower::Odp, VariancePower::Gamma] {
        let cfg = BootstrapConfig::new(5000, power);
        g.bench_function(format!("{power:?}/5000"), |b| {
            b.iter(|| bootstrap_predict(&t, &cfg, Target::UltimateClaim, &mut rng).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, reserving);
criterion_main!(benches);
