use super::mat::{dot, CMat, Mat};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition by one-sided (Hestenes) Jacobi.
///
/// For an m×n input returns `(U, s, V)` with `U` m×k, `V` n×k, k = min(m, n),
/// singular values descending and `A = U diag(s) Vᵀ`. Columns of `U` belonging
/// to zero singular values are left as zero vectors.
pub fn svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    if a.rows() < a.cols() {
        let (u, s, v) = svd(&a.transpose());
        return (v, s, u);
    }
    let m = a.rows();
    let n = a.cols();
    // columns of A as contiguous rows
    let mut ut = a.transpose();
    let mut vt = Mat::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let up = ut.row(p);
                    let uq = ut.row(q);
                    (dot(up, up), dot(uq, uq), dot(up, uq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_rows(&mut ut, p, q, c, s);
                rotate_rows(&mut vt, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sig: Vec<f64> = (0..n).map(|j| dot(ut.row(j), ut.row(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sig[j].partial_cmp(&sig[i]).unwrap());
    let mut u = Mat::zeros(m, n);
    let mut v = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        s.push(sig[k]);
        if sig[k] > 0.0 {
            for i in 0..m {
                u[(i, col)] = ut[(k, i)] / sig[k];
            }
        }
        for i in 0..n {
            v[(i, col)] = vt[(k, i)];
        }
    }
    (u, s, v)
}

fn rotate_rows(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * cols);
    let rp = &mut lo[p * cols..(p + 1) * cols];
    let rq = &mut hi[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let a = *x;
        let b = *y;
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    svd(a).1
}

/// Ratio σ_max/σ_min of a real matrix; `f64::INFINITY` when numerically singular.
pub fn cond2(a: &Mat) -> f64 {
    cond_from_singular_values(&singular_values(a), a.rows().max(a.cols()))
}

/// Complex condition number via the real embedding, which doubles every singular value's multiplicity.
pub fn cond2_complex(a: &CMat) -> f64 {
    cond2(&a.real_embedding())
}

fn cond_from_singular_values(s: &[f64], dim: usize) -> f64 {
    let Some(&smax) = s.first() else {
        return f64::INFINITY;
    };
    let smin = *s.last().unwrap();
    if smax == 0.0 || smin <= smax * f64::EPSILON * dim as f64 {
        return f64::INFINITY;
    }
    (smax / smin).max(1.0)
}
