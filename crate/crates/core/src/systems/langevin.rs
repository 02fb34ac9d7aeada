use super::{check_state, gaussian_vec, rng};
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Euler–Maruyama discretisation of overdamped Langevin dynamics on
/// V(x) = Σ_j (0.05 x_j⁴ − x_j² + 0.1 x_j) + coupling · Σ_{i<j} x_i² x_j².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangevinParams {
    pub eta: f64,
    /// Pairwise coefficient. Negative values make V unbounded below once
    /// several coordinates leave their wells together.
    pub coupling: f64,
    /// Multiplies the √(2η) noise; 0 gives plain gradient descent.
    pub noise_scale: f64,
}

impl Default for LangevinParams {
    fn default() -> Self {
        LangevinParams { eta: 0.01, coupling: -0.2, noise_scale: 1.0 }
    }
}

pub fn langevin_potential(x: &[f64], p: &LangevinParams) -> f64 {
    let single: f64 = x.iter().map(|&v| 0.05 * v.powi(4) - v * v + 0.1 * v).sum();
    let s2: f64 = x.iter().map(|v| v * v).sum();
    let s4: f64 = x.iter().map(|v| v.powi(4)).sum();
    // Σ_{i<j} x_i² x_j² = ((Σx²)² − Σx⁴)/2
    single + p.coupling * 0.5 * (s2 * s2 - s4)
}

pub fn langevin_grad(x: &[f64], p: &LangevinParams, out: &mut [f64]) {
    let s2: f64 = x.iter().map(|v| v * v).sum();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = 0.2 * v * v * v - 2.0 * v + 0.1 + 2.0 * p.coupling * v * (s2 - v * v);
    }
}

/// Flat `t_len × d` states starting at x0.
pub fn langevin_simulate(x0: &[f64], t_len: usize, p: &LangevinParams, seed: u64) -> Result<Vec<f64>> {
    if x0.is_empty() || x0.iter().any(|v| !v.is_finite()) {
        return invalid("Langevin x0 must be a finite non-empty vector");
    }
    if !(p.eta > 0.0) {
        return invalid("eta must be positive");
    }
    let d = x0.len();
    let mut r = rng(seed);
    let amp = p.noise_scale * (2.0 * p.eta).sqrt();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; d];
    let mut out = Vec::with_capacity(d * t_len);
    for t in 0..t_len {
        check_state(&x, t)?;
        out.extend_from_slice(&x);
        langevin_grad(&x, p, &mut g);
        let w = gaussian_vec(&mut r, d);
        for i in 0..d {
            x[i] += -p.eta * g[i] + amp * w[i];
        }
    }
    Ok(out)
}
