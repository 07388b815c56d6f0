use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use smoothcore::rng::stream;
use smoothcore::smoother::{default_max_rejections, ffbsi_rejection_sample_paths};
use smoothcore::{
    bootstrap_proposal, ffbs_backward_additive, ffbs_forward_additive, ffbsi_sample_paths, path_space_estimate,
    run_filter, AdditiveFunctional,
};
use smoothcore_bench::{lgm, two_state};

const HORIZON: usize = 100;

fn filter(c: &mut Criterion) {
    let model = lgm(HORIZON, 1);
    let mut group = c.benchmark_group("filter");
    for n in [100, 400, 1600] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rng = stream(2);
            b.iter(|| run_filter(&model, &bootstrap_proposal(&model), n, HORIZON, &mut rng).unwrap());
        });
    }
    group.finish();
}

fn ffbs(c: &mut Criterion) {
    let model = lgm(HORIZON, 1);
    let f = AdditiveFunctional::<f64>::state_sum(HORIZON);
    let mut group = c.benchmark_group("ffbs");
    for n in [100, 200, 400] {
        let history = run_filter(&model, &bootstrap_proposal(&model), n, HORIZON, &mut stream(3)).unwrap();
        group.bench_with_input(BenchmarkId::new("backward", n), &history, |b, h| {
            b.iter(|| ffbs_backward_additive(h, &model, &f).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("forward", n), &history, |b, h| {
            b.iter(|| ffbs_forward_additive(h, &model, &f).unwrap())
        });
    }
    group.finish();
}

fn ffbsi(c: &mut Criterion) {
    let lgm_model = lgm(HORIZON, 1);
    let hmm = two_state(HORIZON, 1);
    let max_rejections = default_max_rejections(hmm.bounds());
    let mut group = c.benchmark_group("ffbsi");
    for n in [100, 200, 400] {
        let h = run_filter(&lgm_model, &bootstrap_proposal(&lgm_model), n, HORIZON, &mut stream(4)).unwrap();
        group.bench_with_input(BenchmarkId::new("direct_lgm", n), &h, |b, h| {
            let mut rng = stream(5);
            b.iter(|| ffbsi_sample_paths(h, &lgm_model, n, &mut rng).unwrap())
        });
        let h = run_filter(&hmm, &bootstrap_proposal(&hmm), n, HORIZON, &mut stream(4)).unwrap();
        group.bench_with_input(BenchmarkId::new("direct_hmm", n), &h, |b, h| {
            let mut rng = stream(5);
            b.iter(|| ffbsi_sample_paths(h, &hmm, n, &mut rng).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("rejection_hmm", n), &h, |b, h| {
            let mut rng = stream(5);
            b.iter(|| black_box(ffbsi_rejection_sample_paths(h, &hmm, n, max_rejections, &mut rng).unwrap()))
        });
    }
    group.finish();
}

fn path_space(c: &mut Criterion) {
    let model = lgm(HORIZON, 1);
    let f = AdditiveFunctional::<f64>::state_sum(HORIZON);
    let mut group = c.benchmark_group("path_space");
    for n in [100, 400, 1600, 6400] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            let mut rng = stream(6);
            b.iter(|| path_space_estimate(&model, &bootstrap_proposal(&model), &f, n, &mut rng).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, filter, ffbs, ffbsi, path_space);
criterion_main!(benches);
