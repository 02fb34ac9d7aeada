//! Online optimizers for the linear predictor: projected OGD, COCOB-Backprop,
//! Adam, and the Azoury–Vovk–Warmuth forecaster.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{dot, project_fro_ball, Mat};

/// Optimizer choice plus hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "optimizer", rename_all = "snake_case")]
pub enum OptimizerSpec {
    Ogd { eta0: f64, diameter: f64 },
    Cocob { alpha: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
    Avw { lambda: f64 },
}

impl OptimizerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerSpec::Ogd { .. } => "ogd",
            OptimizerSpec::Cocob { .. } => "cocob",
            OptimizerSpec::Adam { .. } => "adam",
            OptimizerSpec::Avw { .. } => "avw",
        }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerSpec::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn cocob() -> Self {
        OptimizerSpec::Cocob { alpha: 100.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            OptimizerSpec::Ogd { eta0, diameter } => *eta0 > 0.0 && *diameter > 0.0,
            OptimizerSpec::Cocob { alpha } => *alpha > 0.0,
            OptimizerSpec::Adam { lr, beta1, beta2, eps } => {
                *lr > 0.0 && (0.0..1.0).contains(beta1) && (0.0..1.0).contains(beta2) && *eps > 0.0
            }
            OptimizerSpec::Avw { lambda } => *lambda > 0.0,
        };
        if ok {
            Ok(())
        } else {
            invalid(format!("bad hyperparameters for optimizer {}", self.name()))
        }
    }

    /// Gradient-based state for this spec; `None` for AVW, which works on features.
    pub fn build(&self, n: usize) -> Option<GradientOptimizer> {
        Some(match *self {
            OptimizerSpec::Ogd { eta0, diameter } => GradientOptimizer::Ogd(Ogd::new(eta0, diameter)),
            OptimizerSpec::Cocob { alpha } => GradientOptimizer::Cocob(Cocob::new(n, alpha)),
            OptimizerSpec::Adam { lr, beta1, beta2, eps } => {
                GradientOptimizer::Adam(Adam::new(n, lr, beta1, beta2, eps))
            }
            OptimizerSpec::Avw { .. } => return None,
        })
    }
}

/// One projected online gradient step: project(Θ − η₀/√t · g, D).
pub fn ogd_step(theta: &mut [f64], g: &[f64], t: u64, eta0: f64, d: f64) {
    let eta = eta0 / (t.max(1) as f64).sqrt();
    for (w, gi) in theta.iter_mut().zip(g) {
        *w -= eta * gi;
    }
    project_fro_ball(theta, d);
}

#[derive(Clone, Debug)]
pub struct Ogd {
    pub eta0: f64,
    pub diameter: f64,
    t: u64,
}

impl Ogd {
    pub fn new(eta0: f64, diameter: f64) -> Self {
        Ogd { eta0, diameter, t: 0 }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        self.t += 1;
        ogd_step(theta, g, self.t, self.eta0, self.diameter);
    }
}

/// COCOB-Backprop, per coordinate.
#[derive(Clone, Debug)]
pub struct Cocob {
    alpha: f64,
    init: Option<Vec<f64>>,
    scale: Vec<f64>,
    abs_sum: Vec<f64>,
    reward: Vec<f64>,
    neg_grad_sum: Vec<f64>,
    t: u64,
}

impl Cocob {
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, alpha: f64) -> Self {
        Cocob {
            alpha,
            init: None,
            scale: vec![Self::EPS; n],
            abs_sum: vec![0.0; n],
            reward: vec![0.0; n],
            neg_grad_sum: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        self.t += 1;
        let init = self.init.get_or_insert_with(|| theta.to_vec());
        for i in 0..theta.len() {
            let gi = g[i];
            let l = self.scale[i].max(gi.abs());
            self.scale[i] = l;
            self.abs_sum[i] += gi.abs();
            self.reward[i] = (self.reward[i] - gi * (theta[i] - init[i])).max(0.0);
            self.neg_grad_sum[i] -= gi;
            let denom = l * (self.abs_sum[i] + l).max(self.alpha * l);
            theta[i] = init[i] + self.neg_grad_sum[i] / denom * (l + self.reward[i]);
        }
    }

    /// Per-coordinate wealth L_i + Reward_i (never negative).
    pub fn wealth(&self) -> Vec<f64> {
        self.scale.iter().zip(&self.reward).map(|(l, r)| l + r).collect()
    }
}

/// Bias-corrected Adam.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam { lr, beta1, beta2, eps, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let b2t = 1.0 - self.beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for i in 0..theta.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            theta[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug)]
pub enum GradientOptimizer {
    Ogd(Ogd),
    Cocob(Cocob),
    Adam(Adam),
}

impl GradientOptimizer {
    pub fn step(&mut self, theta: &mut [f64], g: &[f64]) {
        match self {
            GradientOptimizer::Ogd(o) => o.step(theta, g),
            GradientOptimizer::Cocob(o) => o.step(theta, g),
            GradientOptimizer::Adam(o) => o.step(theta, g),
        }
    }

    pub fn steps(&self) -> u64 {
        match self {
            GradientOptimizer::Ogd(o) => o.t,
            GradientOptimizer::Cocob(o) => o.t,
            GradientOptimizer::Adam(o) => o.t,
        }
    }
}

/// Azoury–Vovk–Warmuth forecaster (forward-regularised online ridge).
///
/// Σ_t = λI + Σ_{s≤t} x_s x_sᵀ and b_t = Σ_{s<t} x_s y_sᵀ; the weights used at
/// step t are Σ_t⁻¹ b_t. Σ⁻¹ and Σ⁻¹b are updated by Sherman–Morrison in O(F²).
#[derive(Clone, Debug)]
pub struct Avw {
    dim: usize,
    out: usize,
    sigma_inv: Mat,
    /// Σ⁻¹ b, dim × out.
    coef: Mat,
    pending: Option<Vec<f64>>,
    t: u64,
}

impl Avw {
    pub fn new(dim: usize, out: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return invalid("AVW regulariser must be positive");
        }
        Ok(Avw {
            dim,
            out,
            sigma_inv: Mat::identity(dim).scale(1.0 / lambda),
            coef: Mat::zeros(dim, out),
            pending: None,
            t: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Add x_t to Σ and return the weights (out × dim) for predicting y_t.
    pub fn prepare(&mut self, x: &[f64]) -> Mat {
        debug_assert_eq!(x.len(), self.dim);
        self.t += 1;
        let z = self.sigma_inv.matvec(x);
        let denom = 1.0 + dot(x, &z);
        // Σ⁻¹ ← Σ⁻¹ − z zᵀ / denom
        for i in 0..self.dim {
            let zi = z[i] / denom;
            if zi == 0.0 {
                continue;
            }
            for (s, zj) in self.sigma_inv.row_mut(i).iter_mut().zip(&z) {
                *s -= zi * zj;
            }
        }
        // coef ← coef − (z/denom) (xᵀ coef)
        let xc = self.coef.tmatvec(x);
        for i in 0..self.dim {
            let zi = z[i] / denom;
            for (c, v) in self.coef.row_mut(i).iter_mut().zip(&xc) {
                *c -= zi * v;
            }
        }
        self.pending = Some(x.to_vec());
        self.coef.transpose()
    }

    /// Fold (x_t, y_t) into b after the prediction for step t was made.
    pub fn observe(&mut self, y: &[f64]) {
        debug_assert_eq!(y.len(), self.out);
        let Some(x) = self.pending.take() else {
            return;
        };
        // coef += Σ⁻¹ x yᵀ
        let z = self.sigma_inv.matvec(&x);
        for i in 0..self.dim {
            for (c, yj) in self.coef.row_mut(i).iter_mut().zip(y) {
                *c += z[i] * yj;
            }
        }
    }

    /// One full step: weights for (x_t), then absorb y_t.
    pub fn step(&mut self, x: &[f64], y: &[f64]) -> Mat {
        let w = self.prepare(x);
        self.observe(y);
        w
    }
}
