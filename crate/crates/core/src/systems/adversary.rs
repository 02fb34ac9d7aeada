use super::{rng, simulate_lds, LdsSystem, Trajectory};
use crate::error::{invalid, Result};
use crate::numerics::Mat;
use rand::Rng;

/// Noise-driven permutation system on which no causal predictor beats
/// loss `d` per block start, while a noise-seeing predictor has zero loss.
#[derive(Clone, Debug)]
pub struct AdversaryStream {
    pub system: LdsSystem,
    pub trajectory: Trajectory,
    /// Predictions of the predictor that sees `w_{t−1}` before forecasting `y_t`.
    pub clairvoyant: Vec<f64>,
    /// First step of every block; the observation there is a fresh ±d.
    pub test_steps: Vec<usize>,
    /// Sign drawn for each block.
    pub signs: Vec<f64>,
}

/// Shift with `x_{t+1}(1) = x_t(d)` and `x_{t+1}(i+1) = x_t(i)`, B = 0, C = e₁ᵀ.
///
/// Steps are split into blocks of length d. Block k gets a sign s_k = ±1 and
/// the noise on the first coordinate is held at `s_k·d − y_{t−d}` during the d
/// steps leading into it, so every observation inside block k equals `s_k·d`.
pub fn adversarial_lowerbound_stream(d: usize, t_len: usize, seed: u64) -> Result<AdversaryStream> {
    if d < 2 {
        return invalid("adversary needs d ≥ 2");
    }
    if t_len == 0 || !t_len.is_multiple_of(d) {
        return invalid(format!("T = {t_len} must be a positive multiple of d = {d}"));
    }
    let blocks = t_len / d;
    let mut r = rng(seed);
    let signs: Vec<f64> = (0..blocks).map(|_| if r.random::<bool>() { 1.0 } else { -1.0 }).collect();
    let level = |t: usize| signs[t / d] * d as f64;
    let a = Mat::from_fn(d, d, |i, j| if i == (j + 1) % d { 1.0 } else { 0.0 });
    let mut c = Mat::zeros(1, d);
    c[(0, 0)] = 1.0;
    let x0 = vec![level(0); d];
    let system = LdsSystem { a, b: Mat::zeros(d, 1), c, x0, normalized: true };

    // y_{t+1} = y_{t+1−d} + w_t(1); before the first wrap the slot holds x0.
    let prev = |t: usize| if t >= d { level(t - d) } else { level(0) };
    let mut w = vec![0.0; t_len * d];
    for t in 0..t_len - 1 {
        w[t * d] = level(t + 1) - prev(t + 1);
    }
    let trajectory = simulate_lds(&system, &vec![0.0; t_len], Some(&w), t_len)?;
    let mut clairvoyant = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let hat = if t == 0 {
            system.x0[0]
        } else if t < d {
            system.x0[d - t] + w[(t - 1) * d]
        } else {
            trajectory.y[t - d] + w[(t - 1) * d]
        };
        clairvoyant.push(hat);
    }
    let test_steps = (0..blocks).map(|k| k * d).collect();
    let mut trajectory = trajectory;
    trajectory.meta.kind = "lowerbound_adversary".into();
    trajectory.meta.seed = Some(seed);
    Ok(AdversaryStream { system, trajectory, clairvoyant, test_steps, signs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clairvoyant_is_exact_and_levels_are_pm_d() {
        let d = 8;
        let s = adversarial_lowerbound_stream(d, 800, 3).unwrap();
        for (t, (&y, &h)) in s.trajectory.y.iter().zip(&s.clairvoyant).enumerate() {
            assert_eq!(y, h, "step {t}");
            assert_eq!(y.abs(), d as f64);
            assert_eq!(y, s.signs[t / d] * d as f64);
        }
        // noise only on the first coordinate, constant within each lead-in window
        let w = s.trajectory.w.as_ref().unwrap();
        for t in 0..799 {
            assert!(w[t * d + 1..(t + 1) * d].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn causal_predictors_pay_d_per_test_step() {
        // predicting the last seen value, or zero, costs d on average at block starts
        let d = 4;
        let (mut last, mut zero, mut n) = (0.0, 0.0, 0.0);
        for seed in 0..1000 {
            let s = adversarial_lowerbound_stream(d, 40, seed).unwrap();
            for &t in s.test_steps.iter().skip(1) {
                let y = s.trajectory.y[t];
                last += (y - s.trajectory.y[t - 1]).abs();
                zero += y.abs();
                n += 1.0;
            }
        }
        assert!(last / n >= 0.9 * d as f64);
        assert!(zero / n >= 0.9 * d as f64);
    }

    #[test]
    fn shape_errors() {
        assert!(adversarial_lowerbound_stream(1, 10, 0).is_err());
        assert!(adversarial_lowerbound_stream(4, 10, 0).is_err());
    }
}
