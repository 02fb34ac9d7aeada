//! Ground-truth data generators: linear systems, the lower-bound adversary,
//! Lorenz, a cart double pendulum and Langevin dynamics.

mod adversary;
mod langevin;
mod lorenz;
mod pendulum;
mod trajectory;

pub use adversary::{adversarial_lowerbound_stream, AdversaryStream};
pub use langevin::{langevin_grad, langevin_potential, langevin_simulate, LangevinParams};
pub use lorenz::{lorenz_simulate, lorenz_step, LorenzParams};
pub use pendulum::{pendulum_energy, pendulum_observe, pendulum_simulate, PendulumParams, PendulumState};
pub use trajectory::{Trajectory, TrajectoryMeta};

use crate::error::{invalid, OsfError, Result};
use crate::numerics::{singular_values, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Any |state entry| above this aborts a simulation.
pub const BLOWUP: f64 = 1e6;

pub(crate) fn check_state(x: &[f64], step: usize) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !v.is_finite() || v.abs() > BLOWUP) {
        return Err(OsfError::Simulation { step, detail: format!("state entry {v:e} exceeds {BLOWUP:e}") });
    }
    Ok(())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// x_{t+1} = A x_t + B u_t + w_t, y_t = C x_t.
#[derive(Clone, Debug, Serialize)]
pub struct LdsSystem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub x0: Vec<f64>,
    pub normalized: bool,
}

impl LdsSystem {
    pub fn new(a: Mat, b: Mat, c: Mat, x0: Vec<f64>) -> Result<Self> {
        let s = LdsSystem { a, b, c, x0, normalized: false };
        s.validate()?;
        Ok(s)
    }

    pub fn d_h(&self) -> usize {
        self.a.rows()
    }

    pub fn d_in(&self) -> usize {
        self.b.cols()
    }

    pub fn d_out(&self) -> usize {
        self.c.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.rows();
        if !self.a.is_square() || self.b.rows() != n || self.c.cols() != n || self.x0.len() != n {
            return invalid(format!(
                "inconsistent LDS dims: A {:?}, B {:?}, C {:?}, x0 {}",
                self.a.shape(),
                self.b.shape(),
                self.c.shape(),
                self.x0.len()
            ));
        }
        if !(self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.x0.iter().all(|v| v.is_finite())) {
            return invalid("non-finite LDS entries");
        }
        Ok(())
    }
}

/// Runs the recursion for `t_len` steps. `u` is flat `t_len × d_in`, `w` (if any)
/// flat `t_len × d_h`; `w_t` is applied after `y_t` is emitted.
pub fn simulate_lds(sys: &LdsSystem, u: &[f64], w: Option<&[f64]>, t_len: usize) -> Result<Trajectory> {
    sys.validate()?;
    let (n, di, dout) = (sys.d_h(), sys.d_in(), sys.d_out());
    if u.len() != t_len * di {
        return invalid(format!("inputs have length {}, expected {}", u.len(), t_len * di));
    }
    if let Some(w) = w {
        if w.len() != t_len * n {
            return invalid(format!("disturbances have length {}, expected {}", w.len(), t_len * n));
        }
    }
    let mut x = sys.x0.clone();
    let mut y = Vec::with_capacity(t_len * dout);
    let mut next = vec![0.0; n];
    for t in 0..t_len {
        y.extend(sys.c.matvec(&x));
        for (i, nx) in next.iter_mut().enumerate() {
            let mut s = crate::numerics::dot(sys.a.row(i), &x);
            if di > 0 {
                s += crate::numerics::dot(sys.b.row(i), &u[t * di..(t + 1) * di]);
            }
            if let Some(w) = w {
                s += w[t * n + i];
            }
            *nx = s;
        }
        std::mem::swap(&mut x, &mut next);
        check_state(&x, t + 1)?;
    }
    Ok(Trajectory {
        d_in: di,
        d_out: dout,
        u: u.to_vec(),
        y,
        w: w.map(|w| w.to_vec()),
        meta: TrajectoryMeta { kind: "lds".into(), seed: None, d_h: Some(n), dt: None },
    })
}

fn spectral_norm(a: &Mat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Gaussian A rescaled to unit spectral norm; B, C, x0 standard normal, d_in = d_out = 1.
pub fn gen_gaussian_lds(d_h: usize, seed: u64) -> Result<LdsSystem> {
    if d_h == 0 {
        return invalid("d_h must be at least 1");
    }
    let mut r = rng(seed);
    let a = Mat::from_vec(d_h, d_h, gaussian_vec(&mut r, d_h * d_h))?;
    let s = spectral_norm(&a);
    let a = if s > 0.0 { a.scale(1.0 / s) } else { a };
    let b = Mat::column_vector(&gaussian_vec(&mut r, d_h));
    let c = Mat::row_vector(&gaussian_vec(&mut r, d_h));
    let x0 = gaussian_vec(&mut r, d_h);
    Ok(LdsSystem { a, b, c, x0, normalized: true })
}

/// Cyclic shift with `A e_1 = e_n` and `A e_{i+1} = e_i`, so `e_1ᵀ A^k = e_{k+1}ᵀ`.
pub fn cyclic_shift(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 })
}

/// Cyclic permutation A with Gaussian B, C, x0 (d_in = d_out = 1).
pub fn gen_permutation_lds(n: usize, seed: u64) -> Result<LdsSystem> {
    if n < 2 {
        return invalid("permutation size must be at least 2");
    }
    let mut r = rng(seed);
    let b = Mat::column_vector(&gaussian_vec(&mut r, n));
    let c = Mat::row_vector(&gaussian_vec(&mut r, n));
    let x0 = gaussian_vec(&mut r, n);
    Ok(LdsSystem { a: cyclic_shift(n), b, c, x0, normalized: true })
}

/// 0.1·sin(3π·t/10)·1; the /10 time scale keeps the signal from vanishing on the integer grid.
pub fn sinusoid_disturbance(t: usize, d_h: usize) -> Vec<f64> {
    vec![0.1 * (3.0 * std::f64::consts::PI * t as f64 / 10.0).sin(); d_h]
}

/// Flat `t_len × d_h` sinusoid disturbance sequence.
pub fn sinusoid_sequence(t_len: usize, d_h: usize) -> Vec<f64> {
    (0..t_len).flat_map(|t| sinusoid_disturbance(t, d_h)).collect()
}

/// Flat `t_len × d` i.i.d. standard normal inputs.
pub fn gaussian_inputs(t_len: usize, d: usize, seed: u64) -> Vec<f64> {
    gaussian_vec(&mut rng(seed), t_len * d)
}

/// Observation of a nonlinear state.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "observe", rename_all = "snake_case")]
pub enum ObservationMap {
    Full,
    /// y = C x for a `d_out × d_X` matrix given by rows.
    Linear {
        c: Vec<Vec<f64>>,
    },
}

impl ObservationMap {
    pub fn d_out(&self, d_x: usize) -> usize {
        match self {
            ObservationMap::Full => d_x,
            ObservationMap::Linear { c } => c.len(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            ObservationMap::Full => x.to_vec(),
            ObservationMap::Linear { c } => c.iter().map(|row| crate::numerics::dot(row, x)).collect(),
        }
    }

    /// A single Gaussian functional on a `d_x`-dimensional state.
    pub fn random_functional(d_x: usize, seed: u64) -> Self {
        ObservationMap::Linear { c: vec![gaussian_vec(&mut rng(seed), d_x)] }
    }
}

/// Nonlinear generator: x_{t+1} = f(x_t), y_t = h(x_t).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NonlinearSystem {
    Lorenz { params: LorenzParams, x0: Vec<f64> },
    DoublePendulum { params: PendulumParams, k: Vec<f64>, x0: PendulumState },
    Langevin { params: LangevinParams, x0: Vec<f64>, seed: u64 },
}

impl NonlinearSystem {
    pub fn name(&self) -> &'static str {
        match self {
            NonlinearSystem::Lorenz { .. } => "lorenz",
            NonlinearSystem::DoublePendulum { .. } => "double_pendulum",
            NonlinearSystem::Langevin { .. } => "langevin",
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            NonlinearSystem::Lorenz { params, .. } => params.dt,
            NonlinearSystem::DoublePendulum { params, .. } => params.dt,
            NonlinearSystem::Langevin { params, .. } => params.eta,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            NonlinearSystem::Lorenz { .. } => 3,
            NonlinearSystem::DoublePendulum { .. } => 8,
            NonlinearSystem::Langevin { x0, .. } => x0.len(),
        }
    }

    /// Flat `t_len × d_X` state sequence starting at x0.
    pub fn states(&self, t_len: usize) -> Result<Vec<f64>> {
        match self {
            NonlinearSystem::Lorenz { params, x0 } => lorenz_simulate(x0, t_len, params),
            NonlinearSystem::DoublePendulum { params, k, x0 } => pendulum_simulate(x0, k, t_len, params),
            NonlinearSystem::Langevin { params, x0, seed } => langevin_simulate(x0, t_len, params, *seed),
        }
    }

    /// Simulates and observes; inputs are empty (d_in = 0).
    pub fn trajectory(&self, t_len: usize, obs: &ObservationMap, seed: Option<u64>) -> Result<Trajectory> {
        let d_x = self.state_dim();
        let x = self.states(t_len)?;
        let y: Vec<f64> = x.chunks(d_x).flat_map(|s| obs.apply(s)).collect();
        Ok(Trajectory {
            d_in: 0,
            d_out: obs.d_out(d_x),
            u: Vec::new(),
            y,
            w: None,
            meta: TrajectoryMeta { kind: self.name().into(), seed, d_h: Some(d_x), dt: Some(self.dt()) },
        })
    }
}
