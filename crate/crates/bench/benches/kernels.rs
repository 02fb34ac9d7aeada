use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use osf_bench::{gaussian_matrix, gaussian_vec, symmetric_matrix};
use osf_core::baselines::{build_predictor, LearnerSettings};
use osf_core::filters::filter_bank;
use osf_core::numerics::{eig_general, sym_eigh};
use osf_core::predictor::{gradient, predict, LossKind, Mode, OsfParams, PredictorConfig};
use std::hint::black_box;

fn filters(c: &mut Criterion) {
    let mut g = c.benchmark_group("filter_bank");
    g.sample_size(10);
    for t in [256, 1024] {
        g.bench_with_input(BenchmarkId::from_parameter(t), &t, |b, &t| {
            b.iter(|| filter_bank(black_box(t), 24).unwrap())
        });
    }
    g.finish();
}

fn predictor(c: &mut Criterion) {
    let cfg = PredictorConfig { t: 512, m: 2, h: 24, d_in: 2, d_out: 3, r: 1e6, d: 1e6, mode: Mode::Full };
    let bank = filter_bank(cfg.t, cfg.h).unwrap();
    let u = gaussian_vec(cfg.u_history_len() * cfg.d_in, 1);
    let y = gaussian_vec(cfg.y_history_len() * cfg.d_out, 2);
    let target = gaussian_vec(cfg.d_out, 3);
    let mut params = OsfParams::zeros(cfg.layout());
    let init = gaussian_vec(params.flat().len(), 4);
    params.flat_mut().copy_from_slice(&init);
    c.bench_function("predict T=512 h=24", |b| {
        b.iter(|| predict(&params, &cfg, &bank, black_box(&u), black_box(&y)).unwrap())
    });
    c.bench_function("gradient T=512 h=24", |b| {
        b.iter(|| gradient(&params, &cfg, &bank, black_box(&u), black_box(&y), &target, LossKind::Squared).unwrap())
    });
}

fn streaming(c: &mut Criterion) {
    let settings = LearnerSettings { filter_len: 512, ..LearnerSettings::default() };
    let ys = gaussian_vec(3 * 4096, 5);
    let mut g = c.benchmark_group("stream step");
    for name in ["sf", "sf_obs"] {
        let mut p = build_predictor(name, 1, 3, &settings, 0).unwrap();
        let mut t = 0;
        g.bench_function(name, |b| {
            b.iter(|| {
                let yt = &ys[3 * (t % 4096)..3 * (t % 4096) + 3];
                black_box(p.predict_next().unwrap());
                p.observe(&[0.1], yt).unwrap();
                t += 1;
            })
        });
    }
    g.finish();
}

fn eigen(c: &mut Criterion) {
    let mut g = c.benchmark_group("eigen");
    g.sample_size(20);
    for n in [16, 64] {
        let s = symmetric_matrix(n, 6);
        let a = gaussian_matrix(n, 7);
        g.bench_with_input(BenchmarkId::new("sym_eigh", n), &s, |b, s| b.iter(|| sym_eigh(black_box(s)).unwrap()));
        g.bench_with_input(BenchmarkId::new("eig_general", n), &a, |b, a| {
            b.iter(|| eig_general(black_box(a)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, filters, predictor, streaming, eigen);
criterion_main!(benches);
