use super::check_state;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, dt: 0.01 }
    }
}

/// One explicit Euler step.
pub fn lorenz_step(x: &[f64; 3], p: &LorenzParams) -> [f64; 3] {
    let dx = [p.sigma * (x[1] - x[0]), x[0] * (p.rho - x[2]) - x[1], x[0] * x[1] - p.beta * x[2]];
    [x[0] + p.dt * dx[0], x[1] + p.dt * dx[1], x[2] + p.dt * dx[2]]
}

/// Flat `t_len × 3` states, starting with x0.
pub fn lorenz_simulate(x0: &[f64], t_len: usize, p: &LorenzParams) -> Result<Vec<f64>> {
    if x0.len() != 3 || x0.iter().any(|v| !v.is_finite()) {
        return invalid("Lorenz x0 must be a finite 3-vector");
    }
    if !(p.dt > 0.0) {
        return invalid("dt must be positive");
    }
    let mut x = [x0[0], x0[1], x0[2]];
    let mut out = Vec::with_capacity(3 * t_len);
    for t in 0..t_len {
        check_state(&x, t)?;
        out.extend_from_slice(&x);
        x = lorenz_step(&x, p);
    }
    Ok(out)
}
