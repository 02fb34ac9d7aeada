//! Black-box battery every registered predictor must pass.

use osf_core::baselines::{
    autoregressive_rollout, build_predictor, DirectLds, EdmdPredictor, LearnerSettings, StreamingPredictor, REGISTRY,
};
use osf_core::numerics::norm;
use osf_core::systems::{gen_gaussian_lds, simulate_lds};

const D_IN: usize = 1;
const D_OUT: usize = 2;
const STEPS: usize = 300;

fn settings() -> LearnerSettings {
    LearnerSettings {
        horizon: STEPS,
        filter_len: 64,
        h: 8,
        m: 2,
        r: 50.0,
        lds_hidden: 4,
        rbf_centers: 5,
        sfedmd_filters: 4,
        ..LearnerSettings::default()
    }
}

/// A smooth two-channel signal and a scalar input.
fn stream(scale: f64) -> (Vec<f64>, Vec<f64>) {
    let u: Vec<f64> = (0..STEPS).map(|t| (0.37 * t as f64).cos()).collect();
    let y: Vec<f64> = (0..STEPS)
        .flat_map(|t| {
            let t = t as f64;
            [scale * (0.1 * t).sin(), scale * (0.05 * t).cos() * (0.013 * t).sin()]
        })
        .collect();
    (u, y)
}

fn run(p: &mut dyn StreamingPredictor, scale: f64) -> Vec<f64> {
    let (u, y) = stream(scale);
    let mut out = Vec::with_capacity(STEPS * D_OUT);
    for t in 0..STEPS {
        out.extend(p.predict_next().unwrap());
        p.observe(&u[t..t + 1], &y[t * D_OUT..(t + 1) * D_OUT]).unwrap();
    }
    out
}

fn each(mut f: impl FnMut(&str, Box<dyn StreamingPredictor>)) {
    for &name in REGISTRY {
        f(name, build_predictor(name, D_IN, D_OUT, &settings(), 7).unwrap());
    }
}

#[test]
fn cold_start_forecast_is_zero() {
    each(|name, mut p| {
        assert_eq!(p.d_out(), D_OUT, "{name}");
        assert_eq!(p.predict_next().unwrap(), vec![0.0; D_OUT], "{name}");
    });
}

#[test]
fn forecast_is_stable_until_observed() {
    each(|name, mut p| {
        run(p.as_mut(), 1.0);
        let a = p.predict_next().unwrap();
        assert_eq!(p.predict_next().unwrap(), a, "{name}");
    });
}

#[test]
fn same_seed_same_forecasts() {
    each(|name, mut p| {
        let mut q = build_predictor(name, D_IN, D_OUT, &settings(), 7).unwrap();
        assert_eq!(run(p.as_mut(), 1.0), run(q.as_mut(), 1.0), "{name}");
    });
}

#[test]
fn forecasts_respect_the_clip_radius() {
    each(|name, mut p| {
        let r = p.clip_radius();
        for (t, y) in run(p.as_mut(), 1e3).chunks(D_OUT).enumerate() {
            assert!(norm(y) <= r * (1.0 + 1e-12), "{name} step {t}: ‖ŷ‖ = {}", norm(y));
            assert!(y.iter().all(|v| v.is_finite()), "{name} step {t}");
        }
    });
}

#[test]
fn reset_replays_like_a_fresh_predictor() {
    each(|name, mut p| {
        let first = run(p.as_mut(), 1.0);
        p.reset();
        assert_eq!(run(p.as_mut(), 1.0), first, "{name}");
    });
}

#[test]
fn wrong_shapes_are_rejected() {
    each(|name, mut p| {
        p.predict_next().unwrap();
        assert!(p.observe(&[0.0], &[1.0; D_OUT + 1]).is_err(), "{name}");
    });
}

#[test]
fn frozen_predictors_do_not_learn() {
    each(|name, mut p| {
        if name == "last_value" {
            return;
        }
        p.set_frozen(true);
        let frozen = run(p.as_mut(), 1.0);
        let mut q = build_predictor(name, D_IN, D_OUT, &settings(), 7).unwrap();
        let learning = run(q.as_mut(), 1.0);
        assert_ne!(frozen, learning, "{name} output is unaffected by learning");
    });
}

#[test]
fn exact_lds_model_rolls_out_the_true_continuation() {
    let d = 4;
    let sys = gen_gaussian_lds(d, 11).unwrap();
    let tr = simulate_lds(&sys, &vec![0.0; 120], None, 120).unwrap();
    let s = LearnerSettings { lds_hidden: d, r: 1e6, ..LearnerSettings::default() };
    // the true system as its own observer: no output feedback
    let b = vec![0.0; d * sys.d_out()];
    let mut p = DirectLds::new(sys.d_out(), &s, 0)
        .unwrap()
        .with_params(sys.a.as_slice(), &b, sys.c.as_slice(), &sys.x0)
        .unwrap();
    let ctx = &tr.y[..70 * sys.d_out()];
    let r = autoregressive_rollout(&mut p, ctx, 0, 50).unwrap();
    assert!(!r.diverged);
    for (got, want) in r.predictions.iter().zip(&tr.y[70 * sys.d_out()..]) {
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn fitted_edmd_rolls_out_linear_data() {
    let d = 3;
    let sys = gen_gaussian_lds(d, 12).unwrap();
    let full =
        osf_core::systems::LdsSystem::new(sys.a.clone(), sys.b.clone(), osf_core::Mat::identity(d), sys.x0.clone())
            .unwrap();
    let tr = simulate_lds(&full, &vec![0.0; 200], None, 200).unwrap();
    let s = LearnerSettings { horizon: 100, rbf_centers: 0, r: 1e6, ..LearnerSettings::default() };
    let mut p = EdmdPredictor::new(d, &s, 0).unwrap();
    for t in 0..100 {
        p.predict_next().unwrap();
        p.observe(&[], tr.y_at(t)).unwrap();
    }
    let r = autoregressive_rollout(&mut p, &[], 0, 50).unwrap();
    for (got, want) in r.predictions.iter().zip(&tr.y[100 * d..150 * d]) {
        assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
}
