use super::{LearnerSettings, StreamingPredictor};
use crate::error::{invalid, Result};
use crate::optimizers::Adam;
use crate::predictor::clip_to_ball;
use crate::systems::BLOWUP;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::collections::VecDeque;

/// Observer LDS s_{t+1} = A s_t + B y_t, ŷ_{t+1} = C s_{t+1}, s_0 = x0, trained
/// by Adam on the squared loss with backpropagation truncated to the last
/// `bptt` steps.
#[derive(Clone, Debug)]
pub struct DirectLds {
    dh: usize,
    dy: usize,
    r: f64,
    bptt: usize,
    lr: f64,
    seed: u64,
    /// [A (dh·dh) | B (dh·dy) | C (dy·dh) | x0 (dh)]
    theta: Vec<f64>,
    adam: Adam,
    /// Current state s_{t+1} (the one the next forecast reads).
    state: Vec<f64>,
    /// Window start state and the observations fed since then, oldest first.
    window_start: VecDeque<Vec<f64>>,
    window_y: VecDeque<Vec<f64>>,
    /// Window begins at s_0, so the gradient reaches x0.
    at_origin: bool,
    pending: Option<Vec<f64>>,
    frozen_output: Option<Vec<f64>>,
    frozen: bool,
    grad: Vec<f64>,
}

impl DirectLds {
    pub fn new(d_out: usize, s: &LearnerSettings, seed: u64) -> Result<Self> {
        if s.lds_hidden == 0 || d_out == 0 || s.lds_bptt == 0 {
            return invalid("LDS baseline needs positive hidden size, output size and BPTT window");
        }
        if !(s.lds_lr > 0.0) {
            return invalid("LDS learning rate must be positive");
        }
        let dh = s.lds_hidden;
        let n = dh * dh + 2 * dh * d_out + dh;
        let mut p = DirectLds {
            dh,
            dy: d_out,
            r: s.r,
            bptt: s.lds_bptt,
            lr: s.lds_lr,
            seed,
            theta: vec![0.0; n],
            adam: Adam::new(n, s.lds_lr, 0.9, 0.999, 1e-8),
            state: vec![0.0; dh],
            window_start: VecDeque::new(),
            window_y: VecDeque::new(),
            at_origin: true,
            pending: None,
            frozen_output: None,
            frozen: false,
            grad: vec![0.0; n],
        };
        p.init();
        Ok(p)
    }

    /// Explicit parameters (for tests and tooling).
    pub fn with_params(mut self, a: &[f64], b: &[f64], c: &[f64], x0: &[f64]) -> Result<Self> {
        let (dh, dy) = (self.dh, self.dy);
        if a.len() != dh * dh || b.len() != dh * dy || c.len() != dy * dh || x0.len() != dh {
            return invalid("LDS parameter shapes do not match");
        }
        self.theta = [a, b, c, x0].concat();
        self.restart();
        Ok(self)
    }

    fn init(&mut self) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let scale = 0.1 / (self.dh as f64).sqrt();
        for v in self.theta.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = scale * z;
        }
        // x0 starts at zero so the cold-start forecast is zero
        let o = self.offsets()[3];
        self.theta[o..].iter_mut().for_each(|v| *v = 0.0);
        self.restart();
    }

    fn restart(&mut self) {
        let n = self.theta.len();
        self.adam = Adam::new(n, self.lr, 0.9, 0.999, 1e-8);
        self.state = self.x0().to_vec();
        self.window_start = VecDeque::from([self.state.clone()]);
        self.window_y.clear();
        self.at_origin = true;
        self.pending = None;
        self.frozen_output = None;
    }

    fn offsets(&self) -> [usize; 4] {
        let (dh, dy) = (self.dh, self.dy);
        [0, dh * dh, dh * dh + dh * dy, dh * dh + 2 * dh * dy]
    }

    fn a(&self) -> &[f64] {
        &self.theta[..self.dh * self.dh]
    }

    fn x0(&self) -> &[f64] {
        let o = self.offsets()[3];
        &self.theta[o..o + self.dh]
    }

    fn advance(&self, s: &[f64], y: &[f64]) -> Vec<f64> {
        let (dh, dy) = (self.dh, self.dy);
        let [_, ob, _, _] = self.offsets();
        let a = self.a();
        let b = &self.theta[ob..ob + dh * dy];
        (0..dh)
            .map(|i| {
                crate::numerics::dot(&a[i * dh..(i + 1) * dh], s) + crate::numerics::dot(&b[i * dy..(i + 1) * dy], y)
            })
            .collect()
    }

    fn readout(&self, s: &[f64]) -> Vec<f64> {
        let (dh, dy) = (self.dh, self.dy);
        let oc = self.offsets()[2];
        let c = &self.theta[oc..oc + dy * dh];
        (0..dy).map(|i| crate::numerics::dot(&c[i * dh..(i + 1) * dh], s)).collect()
    }

    /// Squared-loss gradient for the forecast of `y`, through the stored window
    /// recomputed under the current parameters. Returns the loss.
    pub fn window_gradient(&mut self, y: &[f64]) -> f64 {
        let (dh, dy) = (self.dh, self.dy);
        let [_, ob, oc, ox] = self.offsets();
        let start = if self.at_origin { self.x0().to_vec() } else { self.window_start[0].clone() };
        let mut states = vec![start];
        for yk in &self.window_y {
            let next = self.advance(states.last().unwrap(), yk);
            states.push(next);
        }
        let s_last = states.last().unwrap();
        let hat = self.readout(s_last);
        let e: Vec<f64> = hat.iter().zip(y).map(|(a, b)| 2.0 * (a - b)).collect();
        let loss = hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        let g = &mut self.grad;
        g.iter_mut().for_each(|v| *v = 0.0);
        let theta = &self.theta;
        // dC = e sᵀ, δ = Cᵀ e
        let mut delta = vec![0.0; dh];
        for i in 0..dy {
            for j in 0..dh {
                g[oc + i * dh + j] = e[i] * s_last[j];
                delta[j] += theta[oc + i * dh + j] * e[i];
            }
        }
        for k in (0..self.window_y.len()).rev() {
            let (sk, yk) = (&states[k], &self.window_y[k]);
            for i in 0..dh {
                let di = delta[i];
                if di == 0.0 {
                    continue;
                }
                for j in 0..dh {
                    g[i * dh + j] += di * sk[j];
                }
                for j in 0..dy {
                    g[ob + i * dy + j] += di * yk[j];
                }
            }
            let mut prev = vec![0.0; dh];
            for i in 0..dh {
                let di = delta[i];
                for j in 0..dh {
                    prev[j] += theta[i * dh + j] * di;
                }
            }
            delta = prev;
        }
        if self.at_origin {
            g[ox..ox + dh].copy_from_slice(&delta);
        }
        loss
    }

    pub fn gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }
}

impl StreamingPredictor for DirectLds {
    fn name(&self) -> &str {
        "lds"
    }

    fn d_out(&self) -> usize {
        self.dy
    }

    fn clip_radius(&self) -> f64 {
        self.r
    }

    fn predict_next(&mut self) -> Result<Vec<f64>> {
        if let Some(f) = &self.frozen_output {
            return Ok(f.clone());
        }
        if let Some(p) = &self.pending {
            return Ok(p.clone());
        }
        let mut y = self.readout(&self.state);
        clip_to_ball(&mut y, self.r);
        self.pending = Some(y.clone());
        Ok(y)
    }

    fn observe(&mut self, _u: &[f64], y: &[f64]) -> Result<()> {
        if y.len() != self.dy {
            return invalid("observation has the wrong dimension");
        }
        if self.frozen_output.is_some() {
            return Ok(());
        }
        let last = self.predict_next()?;
        self.pending = None;
        if !self.frozen {
            self.window_gradient(y);
            self.adam.step(&mut self.theta, &self.grad);
        }
        self.state = self.advance(&self.state, y);
        self.window_y.push_back(y.to_vec());
        self.window_start.push_back(self.state.clone());
        if self.window_y.len() > self.bptt {
            self.window_y.pop_front();
            self.window_start.pop_front();
            self.at_origin = false;
        }
        let bad = self.state.iter().chain(&self.theta).any(|v| !v.is_finite() || v.abs() > BLOWUP);
        if bad {
            // freeze at the clip radius along the last finite forecast direction
            let n = crate::numerics::norm(&last);
            let frozen = if n > 0.0 && n.is_finite() {
                last.iter().map(|v| v * self.r / n).collect()
            } else {
                let mut e = vec![0.0; self.dy];
                e[0] = self.r;
                e
            };
            self.frozen_output = Some(frozen);
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.init();
        self.frozen = false;
    }

    fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    fn diverged(&self) -> bool {
        self.frozen_output.is_some()
    }

    fn dynamics_matrix(&self) -> Option<crate::numerics::Mat> {
        crate::numerics::Mat::from_vec(self.dh, self.dh, self.a().to_vec()).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(dh: usize, bptt: usize, lr: f64) -> LearnerSettings {
        LearnerSettings { lds_hidden: dh, lds_bptt: bptt, lds_lr: lr, r: 1e3, ..LearnerSettings::default() }
    }

    #[test]
    fn zero_parameters_predict_zero() {
        let mut p = DirectLds::new(2, &settings(3, 4, 1e-3), 0)
            .unwrap()
            .with_params(&[0.0; 9], &[0.0; 6], &[1.0; 6], &[0.0; 3])
            .unwrap();
        p.set_frozen(true);
        for t in 0..10 {
            assert_eq!(p.predict_next().unwrap(), vec![0.0, 0.0]);
            p.observe(&[], &[t as f64, 1.0]).unwrap();
        }
    }

    #[test]
    fn window_gradient_matches_finite_differences() {
        let mut p = DirectLds::new(1, &settings(2, 3, 1e-3), 4).unwrap();
        p.set_frozen(true);
        for y in [0.3, -0.7, 1.1, 0.4, -0.2] {
            p.predict_next().unwrap();
            p.observe(&[], &[y]).unwrap();
        }
        let target = [0.9];
        p.window_gradient(&target);
        let g = p.gradient().to_vec();
        let n = p.theta().len();
        for k in 0..n {
            let h = 1e-6;
            let base = p.theta()[k];
            p.theta_mut()[k] = base + h;
            let lp = p.window_gradient(&target);
            p.theta_mut()[k] = base - h;
            let lm = p.window_gradient(&target);
            p.theta_mut()[k] = base;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-4 * g[k].abs().max(1e-3), "param {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn learns_scalar_decay() {
        let mut p = DirectLds::new(1, &settings(1, 32, 1e-2), 1).unwrap();
        let mut y = 1.0;
        let mut losses = Vec::new();
        for t in 0..5000 {
            // restart the decay periodically so the signal stays informative
            if t % 100 == 0 {
                y = 1.0;
            }
            let hat = p.predict_next().unwrap()[0];
            losses.push((hat - y) * (hat - y));
            p.observe(&[], &[y]).unwrap();
            y *= 0.9;
        }
        let tail: Vec<f64> = losses[4000..].iter().enumerate().filter(|(i, _)| i % 100 != 0).map(|(_, v)| *v).collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(mean <= 1e-3, "smoothed loss {mean}");
        assert!(!p.diverged());
    }

    #[test]
    fn blow_up_freezes_at_clip_radius() {
        let mut p =
            DirectLds::new(1, &settings(1, 4, 1e-3), 0).unwrap().with_params(&[3.0], &[1.0], &[1.0], &[1.0]).unwrap();
        p.set_frozen(true);
        for _ in 0..40 {
            p.predict_next().unwrap();
            p.observe(&[], &[1.0]).unwrap();
        }
        assert!(p.diverged());
        assert_eq!(p.predict_next().unwrap(), vec![1e3]);
    }
}
