//! Hankel spectral filters and the filtered features they produce.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, OsfError, Result};
use crate::numerics::{dot, gauss_legendre_unit, norm, svd, Mat};

/// Entry (i, j) of the Hankel matrix, 1-indexed.
#[inline]
pub fn hankel_entry(i: usize, j: usize) -> f64 {
    let s = (i + j) as f64;
    2.0 / (s * s * s - s)
}

/// The (T−1)×(T−1) Hankel matrix with entries 2/((i+j)³ − (i+j)).
pub fn hankel_matrix(t: usize) -> Result<Mat> {
    if t < 3 {
        return invalid(format!("hankel_matrix needs T >= 3, got {t}"));
    }
    let n = t - 1;
    Ok(Mat::from_fn(n, n, |i, j| hankel_entry(i + 1, j + 1)))
}

/// Top eigenpairs of the Hankel matrix, used as convolution filters.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FilterBank {
    t: usize,
    sigma: Vec<f64>,
    sigma_quarter: Vec<f64>,
    phi: Vec<Vec<f64>>,
}

impl FilterBank {
    /// Assemble a bank from explicit parts. Filters must all have length T−1.
    pub fn from_parts(t: usize, sigma: Vec<f64>, phi: Vec<Vec<f64>>) -> Result<Self> {
        if t < 2 {
            return invalid("filter horizon must be at least 2");
        }
        if sigma.len() != phi.len() {
            return invalid("sigma and phi lengths differ");
        }
        if phi.iter().any(|p| p.len() != t - 1) {
            return invalid(format!("every filter must have length {}", t - 1));
        }
        if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return invalid("sigma must be finite and nonnegative");
        }
        let sigma_quarter = sigma.iter().map(|s| s.powf(0.25)).collect();
        Ok(FilterBank { t, sigma, sigma_quarter, phi })
    }

    pub fn horizon(&self) -> usize {
        self.t
    }

    /// Filter length, T−1.
    pub fn len(&self) -> usize {
        self.t - 1
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn count(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn sigma_quarter(&self) -> &[f64] {
        &self.sigma_quarter
    }

    pub fn phi(&self, i: usize) -> &[f64] {
        &self.phi[i]
    }

    /// Decay envelope 1e6 · exp(−i / (2 ln T)) for the 1-indexed filter `i`.
    pub fn decay_bound(&self, i: usize) -> f64 {
        1e6 * (-(i as f64) / (2.0 * (self.t as f64).ln())).exp()
    }

    /// σ_i^{1/4}-scaled inner products of each filter with a newest-first history.
    ///
    /// `history` holds `history.len() / dim` vectors of size `dim`, newest
    /// first; missing older entries count as zero. Output is `count() × dim`,
    /// filter-major.
    pub fn filtered_features(&self, history: &[f64], dim: usize) -> Result<Vec<f64>> {
        if dim == 0 {
            return Ok(Vec::new());
        }
        if !history.len().is_multiple_of(dim) {
            return invalid("history length is not a multiple of the vector dimension");
        }
        if history.len() / dim > self.len() {
            return invalid(format!(
                "history has {} entries but filters have length {}",
                history.len() / dim,
                self.len()
            ));
        }
        let mut out = vec![0.0; self.count() * dim];
        self.features_into(history, dim, &mut out);
        Ok(out)
    }

    /// Unchecked kernel of [`filtered_features`](Self::filtered_features); `history` may be shorter than T−1 entries.
    pub(crate) fn features_into(&self, history: &[f64], dim: usize, out: &mut [f64]) {
        let k = (history.len() / dim).min(self.len());
        let history = &history[..k * dim];
        for (i, phi) in self.phi.iter().enumerate() {
            let o = &mut out[i * dim..(i + 1) * dim];
            let s4 = self.sigma_quarter[i];
            if dim == 1 {
                o[0] = s4 * dot(&phi[..k], history);
                continue;
            }
            o.iter_mut().for_each(|x| *x = 0.0);
            for (p, chunk) in phi[..k].iter().zip(history.chunks_exact(dim)) {
                for (x, v) in o.iter_mut().zip(chunk) {
                    *x += p * v;
                }
            }
            o.iter_mut().for_each(|x| *x *= s4);
        }
    }
}

/// Top-`h` eigenpairs of `hankel_matrix(t)`.
///
/// The Hankel matrix equals GᵀG with G_{q,i} = √w_q (1−α_q) α_q^{i−1} for the
/// T-point Gauss–Legendre rule (α_q, w_q) on [0, 1], since each entry is
/// ∫₀¹ (1−α)² α^{i+j−2} dα. Eigenpairs are taken from the singular triplets of
/// G, found by Golub–Kahan–Lanczos bidiagonalisation with full
/// reorthogonalisation. Working with G rather than H keeps small eigenvalues
/// accurate to relative precision (they are squares of singular values) and
/// makes every σ strictly positive.
pub fn filter_bank(t: usize, h: usize) -> Result<FilterBank> {
    if t < 3 {
        return invalid(format!("filter_bank needs T >= 3, got {t}"));
    }
    let n = t - 1;
    if h == 0 || h > n {
        return invalid(format!("filter count must be in 1..={n}, got {h}"));
    }
    let g = GramFactor::new(t);
    let mut k = n.min(h + 40);
    loop {
        let (sigma, phi, converged) = lanczos_top(&g, h, k);
        if converged || k == n {
            if sigma.iter().any(|s| !(*s > 0.0)) {
                return Err(OsfError::NoConvergence(format!(
                    "filter bank for T={t}, h={h} produced a nonpositive eigenvalue"
                )));
            }
            return FilterBank::from_parts(t, sigma, phi);
        }
        k = n.min(2 * k);
    }
}

/// Cached [`filter_bank`]; banks are keyed on exact (T, h) and shared.
pub fn filter_bank_cached(t: usize, h: usize) -> Result<Arc<FilterBank>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<FilterBank>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().unwrap().get(&(t, h)) {
        return Ok(b.clone());
    }
    let bank = Arc::new(filter_bank(t, h)?);
    cache.lock().unwrap().insert((t, h), bank.clone());
    Ok(bank)
}

struct GramFactor {
    n: usize,
    alpha: Vec<f64>,
    scale: Vec<f64>,
}

impl GramFactor {
    fn new(t: usize) -> Self {
        let (alpha, w) = gauss_legendre_unit(t);
        let scale = alpha.iter().zip(&w).map(|(a, w)| w.sqrt() * (1.0 - a)).collect();
        GramFactor { n: t - 1, alpha, scale }
    }

    fn rows(&self) -> usize {
        self.alpha.len()
    }

    /// G v, evaluated row-wise by Horner's rule in α.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.rows()];
        for vi in v.iter().rev() {
            for (a, al) in acc.iter_mut().zip(&self.alpha) {
                *a = *a * al + vi;
            }
        }
        for (a, s) in acc.iter_mut().zip(&self.scale) {
            *a *= s;
        }
        acc
    }

    /// Gᵀ u, walking the powers α^{i−1} forward.
    fn apply_t(&self, u: &[f64]) -> Vec<f64> {
        let mut pw: Vec<f64> = u.iter().zip(&self.scale).map(|(u, s)| u * s).collect();
        let mut out = vec![0.0; self.n];
        for o in out.iter_mut() {
            *o = pw.iter().sum();
            for (p, al) in pw.iter_mut().zip(&self.alpha) {
                *p *= al;
            }
        }
        out
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

fn fresh_direction(len: usize, seed: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut v: Vec<f64> =
        (0..len).map(|i| ((i as f64 + 1.0) * 0.754877666 + seed as f64 * 0.569840291).fract() - 0.5).collect();
    orthogonalize(&mut v, basis);
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

/// k steps of Golub–Kahan–Lanczos on G; returns top-h (σ², right vectors, converged?).
fn lanczos_top(g: &GramFactor, h: usize, k: usize) -> (Vec<f64>, Vec<Vec<f64>>, bool) {
    let n = g.n;
    let m = g.rows();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut us: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut alphas = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k);

    vs.push(fresh_direction(n, 0, &[]));
    let mut u = g.apply(&vs[0]);
    let mut a = norm(&u);
    let tiny = 1e-300;
    if a <= tiny {
        u = fresh_direction(m, 1, &[]);
        a = 0.0;
    } else {
        u.iter_mut().for_each(|x| *x /= a);
    }
    us.push(u);
    alphas.push(a);
    let mut scale = a.max(f64::MIN_POSITIVE);

    for j in 0..k {
        let mut w = g.apply_t(&us[j]);
        for (x, y) in w.iter_mut().zip(&vs[j]) {
            *x -= alphas[j] * y;
        }
        orthogonalize(&mut w, &vs);
        let mut b = norm(&w);
        if j + 1 == k {
            betas.push(b);
            break;
        }
        if b <= 1e-15 * scale {
            w = fresh_direction(n, j + 2, &vs);
            b = 0.0;
        } else {
            w.iter_mut().for_each(|x| *x /= b);
        }
        betas.push(b);
        vs.push(w);

        let mut p = g.apply(&vs[j + 1]);
        for (x, y) in p.iter_mut().zip(&us[j]) {
            *x -= b * y;
        }
        orthogonalize(&mut p, &us);
        let mut a = norm(&p);
        if a <= 1e-15 * scale {
            p = fresh_direction(m, j + 1000, &us);
            a = 0.0;
        } else {
            p.iter_mut().for_each(|x| *x /= a);
        }
        scale = scale.max(a).max(b);
        alphas.push(a);
        us.push(p);
    }

    let kk = alphas.len();
    let bmat = Mat::from_fn(kk, kk, |i, j| {
        if i == j {
            alphas[i]
        } else if j == i + 1 {
            betas[i]
        } else {
            0.0
        }
    });
    let (x, s, y) = svd(&bmat);
    let beta_last = *betas.last().unwrap_or(&0.0);
    let hh = h.min(kk);
    let mut converged = true;
    for i in 0..hh {
        let resid = (beta_last * x[(kk - 1, i)]).abs();
        if resid > 1e-13 * s[0] {
            converged = false;
        }
    }
    let mut sigma = Vec::with_capacity(hh);
    let mut phi = Vec::with_capacity(hh);
    for i in 0..hh {
        let mut v = vec![0.0; n];
        for (r, vr) in vs.iter().take(kk).enumerate() {
            let c = y[(r, i)];
            for (o, z) in v.iter_mut().zip(vr) {
                *o += c * z;
            }
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|z| *z /= nv);
        let lead = v.iter().copied().find(|z| z.abs() > 1e-12).unwrap_or(1.0);
        if lead < 0.0 {
            v.iter_mut().for_each(|z| *z = -*z);
        }
        sigma.push(s[i] * s[i]);
        phi.push(v);
    }
    (sigma, phi, converged && hh == h)
}
