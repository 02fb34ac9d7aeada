use crate::error::{invalid, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// r² ln r, continued by 0 at r = 0.
pub fn thinplate(r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        r * r * r.ln()
    }
}

/// ψ(y) = [y; thinplate(‖y − c_1‖); …; thinplate(‖y − c_k‖)].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfDictionary {
    pub d: usize,
    pub centers: Vec<Vec<f64>>,
}

impl RbfDictionary {
    /// ψ(y) = y.
    pub fn identity(d: usize) -> Self {
        RbfDictionary { d, centers: Vec::new() }
    }

    /// Lifted dimension d + k.
    pub fn size(&self) -> usize {
        self.d + self.centers.len()
    }

    pub fn lift_into(&self, y: &[f64], out: &mut [f64]) {
        out[..self.d].copy_from_slice(y);
        for (o, c) in out[self.d..].iter_mut().zip(&self.centers) {
            let r2: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            // r² ln r = r² · ln(r²) / 2
            *o = if r2 == 0.0 { 0.0 } else { 0.5 * r2 * r2.ln() };
        }
    }

    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.lift_into(y, &mut out);
        out
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means centers (seeded init among distinct points, 20 Lloyd iterations).
///
/// `data` is flat `n × d`.
pub fn fit_rbf_dictionary(data: &[f64], d: usize, k: usize, seed: u64) -> Result<RbfDictionary> {
    if d == 0 || !data.len().is_multiple_of(d) {
        return invalid("data length is not a multiple of the dimension");
    }
    let points: Vec<&[f64]> = data.chunks(d).collect();
    let mut seen = HashSet::new();
    let mut distinct: Vec<&[f64]> = Vec::new();
    for p in &points {
        if seen.insert(p.iter().map(|v| v.to_bits()).collect::<Vec<_>>()) {
            distinct.push(p);
        }
    }
    if distinct.len() < k {
        return invalid(format!("{} distinct points cannot seed {k} distinct centers", distinct.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    distinct.shuffle(&mut rng);
    let mut centers: Vec<Vec<f64>> = distinct[..k].iter().map(|p| p.to_vec()).collect();
    let mut assign = vec![0usize; points.len()];
    for _ in 0..20 {
        for (a, p) in assign.iter_mut().zip(&points) {
            let mut best = (f64::INFINITY, 0);
            for (ci, c) in centers.iter().enumerate() {
                let dd = dist2(p, c);
                if dd < best.0 {
                    best = (dd, ci);
                }
            }
            *a = best.1;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(&points) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p.iter()).for_each(|(s, v)| *s += v);
        }
        for ((c, s), &n) in centers.iter_mut().zip(sums).zip(&counts) {
            // an empty cluster keeps its previous center
            if n > 0 {
                *c = s.into_iter().map(|v| v / n as f64).collect();
            }
        }
    }
    Ok(RbfDictionary { d, centers })
}
