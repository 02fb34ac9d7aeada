use super::mat::{dot, Mat};
use super::svd::svd;
use crate::error::{invalid, OsfError, Result};

/// Minimum-norm least squares: W minimising ‖XW − Y‖_F.
///
/// Tall problems are first compressed with a Householder QR; the (small)
/// triangular factor is then pseudo-inverted through its SVD, truncating
/// singular values below `max(n, p) · ε · σ_max`.
pub fn lstsq(x: &Mat, y: &Mat) -> Result<Mat> {
    lstsq_rank(x, y).map(|(w, _)| w)
}

/// [`lstsq`] that also reports the numerical rank of X.
pub fn lstsq_rank(x: &Mat, y: &Mat) -> Result<(Mat, usize)> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return invalid("lstsq needs at least one row and one column");
    }
    if y.rows() != n {
        return invalid(format!("lstsq: X has {n} rows but Y has {}", y.rows()));
    }
    if !x.is_finite() || !y.is_finite() {
        return invalid("lstsq input has non-finite entries");
    }
    let (a, b) = if n > p {
        let (r, qty) = householder_qr_apply(x, y);
        (r, qty)
    } else {
        (x.clone(), y.clone())
    };
    let (u, s, v) = svd(&a);
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = smax * f64::EPSILON * n.max(p) as f64;
    let q = b.cols();
    // W = V Σ⁺ Uᵀ b
    let utb = u.transpose().mul(&b);
    let mut scaled = Mat::zeros(s.len(), q);
    let mut rank = 0;
    for (k, sk) in s.iter().enumerate() {
        if *sk > tol {
            rank += 1;
            for j in 0..q {
                scaled[(k, j)] = utb[(k, j)] / sk;
            }
        }
    }
    Ok((v.mul(&scaled), rank))
}

/// Householder QR of tall X (n > p). Returns (R p×p, first p rows of Qᵀ Y).
fn householder_qr_apply(x: &Mat, y: &Mat) -> (Mat, Mat) {
    let (n, p) = x.shape();
    let q = y.cols();
    // work column-major: rows of `at` are columns of X
    let mut at = x.transpose();
    let mut yt = y.transpose();
    for k in 0..p {
        let col = &at.row(k)[k..];
        let alpha = dot(col, col).sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = col[0];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let mut v: Vec<f64> = col.to_vec();
        v[0] = x0 - beta;
        let vn2 = dot(&v, &v);
        if vn2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vn2;
        for j in (k + 1)..p {
            let cj = &mut at.row_mut(j)[k..];
            let s = tau * dot(&v, cj);
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        for j in 0..q {
            let cj = &mut yt.row_mut(j)[k..];
            let s = tau * dot(&v, cj);
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= s * vi;
            }
        }
        let ck = &mut at.row_mut(k)[k..];
        ck[0] = beta;
        for c in ck[1..].iter_mut() {
            *c = 0.0;
        }
    }
    let r = Mat::from_fn(p, p, |i, j| if i <= j { at[(j, i)] } else { 0.0 });
    let qty = Mat::from_fn(p, q, |i, j| yt[(j, i)]);
    let _ = n;
    (r, qty)
}

/// Cholesky factor of a symmetric positive definite matrix (lower triangular).
pub fn cholesky(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return invalid("cholesky needs a square matrix");
    }
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                if !(s > 0.0) {
                    return Err(OsfError::RankDeficient { rank: i, required: n });
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve (L Lᵀ) X = B given the Cholesky factor L.
pub fn cholesky_solve(l: &Mat, b: &Mat) -> Mat {
    let n = l.rows();
    let q = b.cols();
    let mut x = b.clone();
    for j in 0..q {
        for i in 0..n {
            let mut s = x[(i, j)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, j)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[(k, j)];
            }
            x[(i, j)] = s / l[(i, i)];
        }
    }
    x
}

/// Solve a symmetric positive semidefinite system `G W = B` with a small
/// relative ridge `rel · tr(G)/n` added to the diagonal.
pub fn ridge_solve(g: &Mat, b: &Mat, rel: f64) -> Result<Mat> {
    let n = g.rows();
    let tr: f64 = (0..n).map(|i| g[(i, i)]).sum::<f64>() / n.max(1) as f64;
    let lam = (rel * tr).max(f64::MIN_POSITIVE);
    let mut reg = g.clone();
    for i in 0..n {
        reg[(i, i)] += lam;
    }
    let l = cholesky(&reg)?;
    Ok(cholesky_solve(&l, b))
}

/// Solve a general square system by partial-pivot LU.
pub fn lu_solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() || a.rows() != b.len() {
        return invalid("lu_solve shape mismatch");
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap()).unwrap();
        if m[(p, k)] == 0.0 {
            return Err(OsfError::RankDeficient { rank: k, required: n });
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            x.swap(p, k);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
            x[i] -= f * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}
