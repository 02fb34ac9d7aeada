use crate::error::{invalid, OsfError, Result};
use crate::numerics::norm;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Largest net a caller may build.
pub const MAX_NET_POINTS: f64 = 1e7;

/// Cubic lattice of spacing 2ε/√d clipped to the ball of radius R + ε.
///
/// Every point of the radius-R ball is within ε of some net point. Points are
/// ordered lexicographically by integer lattice coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsNet {
    pub d: usize,
    pub radius: f64,
    pub eps: f64,
    pub spacing: f64,
    /// Integer lattice coordinates, one entry of `d` per point.
    coords: Vec<i64>,
    #[serde(skip)]
    index: HashMap<Vec<i64>, usize>,
}

/// Builds the lattice net; `d ≤ 4`.
pub fn build_eps_net(radius: f64, eps: f64, d: usize) -> Result<EpsNet> {
    if d == 0 || d > 4 {
        return invalid(format!("net dimension {d} outside 1..=4"));
    }
    if !(eps > 0.0) || !(radius > 0.0) || !radius.is_finite() {
        return invalid("net needs R > 0 and ε > 0");
    }
    let spacing = 2.0 * eps / (d as f64).sqrt();
    let reach = radius + eps;
    let kmax = (reach / spacing).floor() as i64;
    let side = (2 * kmax + 1) as f64;
    if side.powi(d as i32) > MAX_NET_POINTS {
        return Err(OsfError::Resource(format!(
            "ε-net would need ~{:.3e} points (bound (2R/ε)^d = {:.3e})",
            side.powi(d as i32),
            (2.0 * radius / eps).powi(d as i32)
        )));
    }
    let mut coords = Vec::new();
    let mut k = vec![-kmax; d];
    let r2 = reach * reach * (1.0 + 1e-12);
    loop {
        let n2: f64 = k.iter().map(|&v| (v as f64 * spacing).powi(2)).sum();
        if n2 <= r2 {
            coords.extend_from_slice(&k);
        }
        // odometer over [-kmax, kmax]^d, last coordinate fastest
        let mut i = d;
        loop {
            if i == 0 {
                return Ok(EpsNet::from_coords(d, radius, eps, spacing, coords));
            }
            i -= 1;
            if k[i] < kmax {
                k[i] += 1;
                break;
            }
            k[i] = -kmax;
        }
    }
}

impl EpsNet {
    fn from_coords(d: usize, radius: f64, eps: f64, spacing: f64, coords: Vec<i64>) -> Self {
        let index = coords.chunks(d).enumerate().map(|(i, c)| (c.to_vec(), i)).collect();
        EpsNet { d, radius, eps, spacing, coords, index }
    }

    /// Rebuilds the lookup table after deserialisation.
    pub fn reindex(&mut self) {
        self.index = self.coords.chunks(self.d).enumerate().map(|(i, c)| (c.to_vec(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.coords[i * self.d..(i + 1) * self.d].iter().map(|&k| k as f64 * self.spacing).collect()
    }

    /// Index of the nearest net point; ties go to the lower lattice coordinate.
    ///
    /// Errors when `x` lies outside the radius-(R+ε) ball.
    pub fn project(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.d {
            return invalid(format!("point has dimension {}, net has {}", x.len(), self.d));
        }
        let nx = norm(x);
        if !(nx <= (self.radius + self.eps) * (1.0 + 1e-12)) {
            return Err(OsfError::Domain(format!(
                "point {x:?} (norm {nx}) escapes the radius-{} ball",
                self.radius + self.eps
            )));
        }
        let k: Vec<i64> = x.iter().map(|&v| (v / self.spacing - 0.5).ceil() as i64).collect();
        if let Some(&i) = self.index.get(&k) {
            return Ok(i);
        }
        // rounded lattice point lies just outside the clipped ball: scan
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let d2: f64 = self.point(i).iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum();
            if d2 < best.0 {
                best = (d2, i);
            }
        }
        Ok(best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn one_dimensional_net() {
        let net = build_eps_net(1.0, 0.5, 1).unwrap();
        let pts: Vec<f64> = (0..net.len()).map(|i| net.point(i)[0]).collect();
        assert_eq!(pts, vec![-1.0, 0.0, 1.0]);
        assert!(net.len() as f64 <= 4.0);
        // tie at 0.5 goes to the lower point
        assert_eq!(net.point(net.project(&[0.5]).unwrap()), vec![0.0]);
    }

    #[test]
    fn covering_monte_carlo() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (d, r, eps) in [(2, 1.0, 0.05), (3, 1.0, 0.1), (4, 0.5, 0.1)] {
            let net = build_eps_net(r, eps, d).unwrap();
            assert!((net.len() as f64) <= (2.0 * r / eps).powi(d as i32));
            for _ in 0..10_000 {
                let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-r..r)).collect();
                let n = norm(&x);
                if n > r {
                    x.iter_mut().for_each(|v| *v *= r / n * rng.random::<f64>());
                }
                let p = net.point(net.project(&x).unwrap());
                let dist = p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(dist <= eps * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(build_eps_net(1.0, 0.1, 5).is_err());
        assert!(build_eps_net(1.0, 0.0, 2).is_err());
        assert!(matches!(build_eps_net(1.0, 1e-4, 3), Err(OsfError::Resource(_))));
        let net = build_eps_net(1.0, 0.1, 2).unwrap();
        assert!(matches!(net.project(&[2.0, 0.0]), Err(OsfError::Domain(_))));
    }
}
