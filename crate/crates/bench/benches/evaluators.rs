use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ratelab_core::convergence_lab::binomial_tail_log_prob;
use ratelab_core::legendre::conjugate;
use ratelab_core::levy_models::{positive_stable, JumpMixture, LevyModel};
use ratelab_core::linalg::Matrix;
use ratelab_core::mittag_leffler::MlParams;
use ratelab_core::random_time::InverseStableModel;
use ratelab_core::rate_functions::LimitCumulant;
use ratelab_core::rng::{stream_rng, StreamDomain};

fn bench_mittag_leffler(c: &mut Criterion) {
    let params = MlParams::new(0.5).unwrap().with_max_terms(100_000);
    let mut group = c.benchmark_group("mittag_leffler");
    // one argument per evaluation regime
    for (label, x) in [
        ("series_positive", 3.0),
        ("series_alternating", -2.0),
        ("spectral_integral", -5.0),
        ("algebraic_tail", -40.0),
    ] {
        group.bench_with_input(BenchmarkId::new("eval", label), &x, |b, &x| {
            b.iter(|| params.eval(black_box(x)).unwrap())
        });
    }
    group.bench_function("log_eval_asymptotic", |b| {
        b.iter(|| params.log_eval(black_box(100.0)))
    });
    group.finish();
}

fn bench_conjugate(c: &mut Criterion) {
    let mut group = c.benchmark_group("conjugate");
    let gauss = LimitCumulant::gauss_md(Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]))
        .unwrap()
        .conjugate_problem();
    group.bench_function("gauss_md_newton_2d", |b| {
        b.iter(|| conjugate(&gauss, black_box(&[1.0, -0.4])).unwrap().value)
    });
    let poisson = LimitCumulant::poisson_ld(0.5, JumpMixture::unit_point_mass())
        .unwrap()
        .conjugate_problem();
    group.bench_function("poisson_ld_bfgs_1d", |b| {
        b.iter(|| conjugate(&poisson, black_box(&[0.75])).unwrap().value)
    });
    let kinked = LimitCumulant::imm_md_drift(vec![2.0, 1.0], 0.5)
        .unwrap()
        .conjugate_problem();
    group.bench_function("drift_kink_bfgs_2d", |b| {
        b.iter(|| conjugate(&kinked, black_box(&[1.0, 0.5])).unwrap().value)
    });
    group.finish();
}

fn bench_samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("samplers");
    group.bench_function("positive_stable_draw", |b| {
        let mut rng = stream_rng(1, StreamDomain::Clock, 0);
        b.iter(|| positive_stable(black_box(0.6), &mut rng))
    });
    group.bench_function("inverse_stable_draw", |b| {
        let model = InverseStableModel::new(0.5).unwrap();
        let mut rng = stream_rng(2, StreamDomain::Clock, 0);
        b.iter(|| model.sample(black_box(1e4), &mut rng))
    });
    group.bench_function("brownian_batch_10k", |b| {
        let model = LevyModel::standard_brownian(2);
        b.iter(|| model.sample_batch(1.0, 10_000, black_box(7)).unwrap())
    });
    group.finish();
}

fn bench_tail_enumeration(c: &mut Criterion) {
    c.bench_function("binomial_tail_n2000", |b| {
        b.iter(|| binomial_tail_log_prob(2000, black_box(0.5), 1500))
    });
}

fn bench_contract(c: &mut Criterion) {
    use ratelab_core::legendre::{contract, ContractionProblem};
    use ratelab_core::rate_functions::{skew_fiber_chart, skew_map};
    let delta = vec![0.6];
    let problem = ContractionProblem::new(
        Arc::new(|x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1])),
        {
            let d = delta.clone();
            Arc::new(move |x: &[f64]| skew_map(x, &d))
        },
        2,
        vec![1.0],
    )
    .with_chart(skew_fiber_chart(&[1.0], &delta));
    c.bench_function("contract_skew_fiber", |b| {
        b.iter(|| contract(black_box(&problem)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_mittag_leffler,
    bench_conjugate,
    bench_samplers,
    bench_tail_enumeration,
    bench_contract
);
criterion_main!(benches);
