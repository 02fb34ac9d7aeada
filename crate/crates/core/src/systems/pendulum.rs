use super::check_state;
use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Cart with a two-link pendulum on top, point masses at the link ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PendulumParams {
    pub m_cart: f64,
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
    pub dt: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams { m_cart: 1.0, m1: 1.0, m2: 1.0, l1: 1.0, l2: 1.0, g: 9.81, dt: 0.01 }
    }
}

/// Generalised coordinates. Angles are absolute, measured from upright.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PendulumState {
    pub x: f64,
    pub th1: f64,
    pub th2: f64,
    pub xd: f64,
    pub th1d: f64,
    pub th2d: f64,
}

impl PendulumState {
    fn to_array(self) -> [f64; 6] {
        [self.x, self.th1, self.th2, self.xd, self.th1d, self.th2d]
    }

    fn from_array(a: [f64; 6]) -> Self {
        PendulumState { x: a[0], th1: a[1], th2: a[2], xd: a[3], th1d: a[4], th2d: a[5] }
    }
}

/// `[sin q1, cos q1, sin q2, cos q2, q̇1, q̇2, x, ẋ]` with q1 the first link
/// angle and q2 the elbow angle (second link relative to the first).
pub fn pendulum_observe(s: &PendulumState) -> [f64; 8] {
    let q2 = s.th2 - s.th1;
    [s.th1.sin(), s.th1.cos(), q2.sin(), q2.cos(), s.th1d, s.th2d - s.th1d, s.x, s.xd]
}

/// Kinetic plus potential energy.
pub fn pendulum_energy(s: &PendulumState, p: &PendulumParams) -> f64 {
    let (c1, c2, c12) = (s.th1.cos(), s.th2.cos(), (s.th1 - s.th2).cos());
    let kin = 0.5 * (p.m_cart + p.m1 + p.m2) * s.xd * s.xd
        + (p.m1 + p.m2) * p.l1 * c1 * s.xd * s.th1d
        + p.m2 * p.l2 * c2 * s.xd * s.th2d
        + 0.5 * (p.m1 + p.m2) * p.l1 * p.l1 * s.th1d * s.th1d
        + 0.5 * p.m2 * p.l2 * p.l2 * s.th2d * s.th2d
        + p.m2 * p.l1 * p.l2 * c12 * s.th1d * s.th2d;
    let pot = (p.m1 + p.m2) * p.g * p.l1 * c1 + p.m2 * p.g * p.l2 * c2;
    kin + pot
}

fn solve3(m: [[f64; 3]; 3], f: [f64; 3]) -> [f64; 3] {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = f[i];
        }
        *o = det(mk) / d;
    }
    out
}

/// Time derivative of `[x, θ1, θ2, ẋ, θ̇1, θ̇2]` under cart force `force`.
fn derivative(s: &[f64; 6], force: f64, p: &PendulumParams) -> [f64; 6] {
    let [_, th1, th2, _, w1, w2] = *s;
    let (s1, c1, s2, c2) = (th1.sin(), th1.cos(), th2.sin(), th2.cos());
    let (s12, c12) = ((th1 - th2).sin(), (th1 - th2).cos());
    let m12 = p.m1 + p.m2;
    let mass = [
        [p.m_cart + m12, m12 * p.l1 * c1, p.m2 * p.l2 * c2],
        [m12 * p.l1 * c1, m12 * p.l1 * p.l1, p.m2 * p.l1 * p.l2 * c12],
        [p.m2 * p.l2 * c2, p.m2 * p.l1 * p.l2 * c12, p.m2 * p.l2 * p.l2],
    ];
    let rhs = [
        force + m12 * p.l1 * s1 * w1 * w1 + p.m2 * p.l2 * s2 * w2 * w2,
        -p.m2 * p.l1 * p.l2 * s12 * w2 * w2 + m12 * p.g * p.l1 * s1,
        p.m2 * p.l1 * p.l2 * s12 * w1 * w1 + p.m2 * p.g * p.l2 * s2,
    ];
    let acc = solve3(mass, rhs);
    [s[3], s[4], s[5], acc[0], acc[1], acc[2]]
}

/// One RK4 step with the force held fixed over the step.
pub(crate) fn rk4_step(s: &PendulumState, force: f64, p: &PendulumParams) -> PendulumState {
    let x = s.to_array();
    let h = p.dt;
    let shifted = |k: &[f64; 6], a: f64| {
        let mut y = x;
        for i in 0..6 {
            y[i] += a * k[i];
        }
        y
    };
    let k1 = derivative(&x, force, p);
    let k2 = derivative(&shifted(&k1, h / 2.0), force, p);
    let k3 = derivative(&shifted(&k2, h / 2.0), force, p);
    let k4 = derivative(&shifted(&k3, h), force, p);
    let mut y = x;
    for i in 0..6 {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    PendulumState::from_array(y)
}

/// Flat `t_len × 8` observations under feedback `u_t = K·obs_t`, starting at x0.
pub fn pendulum_simulate(x0: &PendulumState, k: &[f64], t_len: usize, p: &PendulumParams) -> Result<Vec<f64>> {
    if k.len() != 8 {
        return invalid(format!("feedback row has {} entries, expected 8", k.len()));
    }
    if x0.to_array().iter().any(|v| !v.is_finite()) {
        return invalid("pendulum x0 must be finite");
    }
    if !(p.dt > 0.0) {
        return invalid("dt must be positive");
    }
    let mut s = *x0;
    let mut out = Vec::with_capacity(8 * t_len);
    for t in 0..t_len {
        check_state(&s.to_array(), t)?;
        let obs = pendulum_observe(&s);
        out.extend_from_slice(&obs);
        let force = crate::numerics::dot(k, &obs);
        s = rk4_step(&s, force, p);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_equilibrium_persists() {
        let obs = pendulum_simulate(&PendulumState::default(), &[0.0; 8], 100, &PendulumParams::default()).unwrap();
        for o in obs.chunks(8) {
            assert!(o[0].abs() < 1e-9 && o[2].abs() < 1e-9);
        }
    }

    #[test]
    fn gravity_free_energy_and_momentum() {
        let p = PendulumParams { g: 0.0, ..PendulumParams::default() };
        let mut s = PendulumState { th1d: 1.3, th2d: 1.3, ..PendulumState::default() };
        let e0 = pendulum_energy(&s, &p);
        let momentum = |s: &PendulumState| 3.0 * s.xd + 2.0 * s.th1.cos() * s.th1d + s.th2.cos() * s.th2d;
        let p0 = momentum(&s);
        for _ in 0..1000 {
            s = rk4_step(&s, 0.0, &p);
        }
        assert!((pendulum_energy(&s, &p) - e0).abs() <= 1e-6 * e0.abs());
        assert!((momentum(&s) - p0).abs() < 1e-6, "{} vs {p0}", momentum(&s));
    }

    fn max_energy_drift(s0: PendulumState, p: &PendulumParams, steps: usize) -> (f64, f64) {
        let mut s = s0;
        let e0 = pendulum_energy(&s, p);
        let mut worst: f64 = 0.0;
        for _ in 0..steps {
            s = rk4_step(&s, 0.0, p);
            worst = worst.max((pendulum_energy(&s, p) - e0).abs());
        }
        (worst, e0.abs())
    }

    #[test]
    fn energy_drift_with_gravity() {
        // swinging below the pivot at the default step
        let swing = PendulumState { th1: 2.6, th2: 3.5, ..PendulumState::default() };
        let (drift, e) = max_energy_drift(swing, &PendulumParams::default(), 10_000);
        assert!(drift <= 1e-4 * e, "drift {drift} vs energy {e}");
        // chaotic fall from near upright needs a finer step for the same bound
        let fall = PendulumState { th1: 0.4, th2: -0.3, ..PendulumState::default() };
        let fine = PendulumParams { dt: 0.0025, ..PendulumParams::default() };
        let (drift, e) = max_energy_drift(fall, &fine, 10_000);
        assert!(drift <= 1e-4 * e, "drift {drift} vs energy {e}");
    }

    #[test]
    fn observation_layout() {
        let s = PendulumState { x: 2.0, th1: 0.5, th2: 0.7, xd: -1.0, th1d: 0.25, th2d: 1.0 };
        let o = pendulum_observe(&s);
        assert_eq!(o[0], 0.5f64.sin());
        assert!((o[2] - 0.2f64.sin()).abs() < 1e-15);
        assert_eq!(o[4], 0.25);
        assert_eq!(o[5], 0.75);
        assert_eq!((o[6], o[7]), (2.0, -1.0));
    }

    #[test]
    fn wrong_feedback_width() {
        assert!(pendulum_simulate(&PendulumState::default(), &[0.0; 3], 5, &PendulumParams::default()).is_err());
    }
}
