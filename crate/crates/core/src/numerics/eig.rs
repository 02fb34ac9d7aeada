use num_complex::Complex64;

use super::mat::{CMat, Mat};
use crate::error::{invalid, OsfError, Result};

/// Eigenvalues of a general real square matrix.
///
/// Balancing, Householder reduction to Hessenberg form and Francis double-shift
/// QR. Complex eigenvalues come out as adjacent conjugate pairs (positive
/// imaginary part first); the list is sorted by decreasing modulus.
pub fn eig_general(a: &Mat) -> Result<Vec<Complex64>> {
    if !a.is_square() {
        return invalid(format!("eig_general needs a square matrix, got {}x{}", a.rows(), a.cols()));
    }
    if !a.is_finite() {
        return invalid("eig_general input has non-finite entries");
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut vals = hqr(&mut h)?;
    sort_eigenvalues(&mut vals);
    Ok(vals)
}

pub(crate) fn sort_eigenvalues(vals: &mut [Complex64]) {
    vals.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .unwrap()
            .then(y.re.partial_cmp(&x.re).unwrap())
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
}

/// Eigenvalues and unit-norm eigenvectors (columns of the returned matrix).
///
/// Vectors come from inverse iteration on the original matrix. Each vector is
/// phase-normalised so its largest-modulus component is real and positive.
/// Fails with [`OsfError::IllConditioned`] when two eigenvalues are closer than
/// `1e-10 · max(1, ρ(A))`, where no stable eigenbasis can be recovered.
pub fn eig_vectors(a: &Mat) -> Result<(Vec<Complex64>, CMat)> {
    let vals = eig_general(a)?;
    let n = vals.len();
    let scale = vals.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in 0..i {
            min_gap = min_gap.min((vals[i] - vals[j]).norm());
        }
    }
    if n > 1 && min_gap <= 1e-10 * scale {
        return Err(OsfError::IllConditioned { min_gap });
    }
    let anorm = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let ac = a.to_complex();
    let mut h = CMat::zeros(n, n);
    let mut k = 0;
    while k < n {
        let lambda = vals[k];
        let v = inverse_iteration(&ac, lambda, anorm)?;
        h.set_col(k, &v);
        // conjugate partner shares the conjugated vector
        if lambda.im != 0.0 && k + 1 < n && vals[k + 1] == lambda.conj() {
            let vc: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
            h.set_col(k + 1, &vc);
            k += 2;
        } else {
            k += 1;
        }
    }
    let resid = ac.mul(&h).frobenius_norm_diff(&scale_columns(&h, &vals));
    if !(resid <= 1e-6 * anorm * (n as f64).sqrt()) {
        return Err(OsfError::IllConditioned { min_gap });
    }
    Ok((vals, h))
}

fn scale_columns(h: &CMat, vals: &[Complex64]) -> CMat {
    CMat::from_fn(h.rows(), h.cols(), |i, j| h[(i, j)] * vals[j])
}

impl CMat {
    pub(crate) fn frobenius_norm_diff(&self, other: &CMat) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                s += (self[(i, j)] - other[(i, j)]).norm_sqr();
            }
        }
        s.sqrt()
    }
}

fn inverse_iteration(a: &CMat, lambda: Complex64, anorm: f64) -> Result<Vec<Complex64>> {
    let n = a.rows();
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= lambda;
    }
    let lu = ComplexLu::new(m, f64::EPSILON * anorm);
    // fixed, non-special start vector so results are reproducible
    let mut x: Vec<Complex64> =
        (0..n).map(|i| Complex64::new(1.0 + 0.37 * ((i * 7919) % 13) as f64 / 13.0, 0.0)).collect();
    for _ in 0..4 {
        let y = lu.solve(&x);
        let nrm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(OsfError::NoConvergence("inverse iteration produced a degenerate vector".into()));
        }
        x = y.into_iter().map(|z| z / nrm).collect();
    }
    // phase-normalise
    let (imax, _) = x
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, z)| if z.norm() > bv + 1e-14 { (i, z.norm()) } else { (bi, bv) });
    let phase = x[imax].conj() / x[imax].norm();
    let mut x: Vec<Complex64> = x.into_iter().map(|z| z * phase).collect();
    if lambda.im == 0.0 {
        for z in x.iter_mut() {
            z.im = 0.0;
        }
        let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in x.iter_mut() {
            *z /= nrm;
        }
    }
    Ok(x)
}

struct ComplexLu {
    lu: CMat,
    perm: Vec<usize>,
}

impl ComplexLu {
    /// Partial-pivot LU; pivots smaller than `tiny` are replaced by `tiny` (standard inverse-iteration trick).
    fn new(mut lu: CMat, tiny: f64) -> Self {
        let n = lu.rows();
        let tiny = tiny.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in (k + 1)..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
            }
            if lu[(k, k)].norm() < tiny {
                lu[(k, k)] = Complex64::new(tiny, 0.0);
            }
            let piv = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..n {
                    let t = lu[(k, j)];
                    lu[(i, j)] -= f * t;
                }
            }
        }
        ComplexLu { lu, perm }
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = b.len();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= l * xk;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let u = self.lu[(i, k)];
                let xk = x[k];
                x[i] -= u * xk;
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }
}

/// Diagonal similarity scaling by powers of two to equalise row and column norms.
fn balance(a: &mut Mat) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(h: &mut Mat) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let alpha: f64 = ((k + 1)..n).map(|i| h[(i, k)] * h[(i, k)]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        for i in 0..n {
            v[i] = 0.0;
        }
        v[k + 1] = x0 - beta;
        for i in (k + 2)..n {
            v[i] = h[(i, k)];
        }
        let vnorm2: f64 = v[k + 1..].iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let tau = 2.0 / vnorm2;
        // H <- (I - tau v vᵀ) H
        for j in k..n {
            let s: f64 = ((k + 1)..n).map(|i| v[i] * h[(i, j)]).sum();
            let s = s * tau;
            for i in (k + 1)..n {
                h[(i, j)] -= s * v[i];
            }
        }
        // H <- H (I - tau v vᵀ)
        for i in 0..n {
            let s: f64 = ((k + 1)..n).map(|j| h[(i, j)] * v[j]).sum();
            let s = s * tau;
            for j in (k + 1)..n {
                h[(i, j)] -= s * v[j];
            }
        }
        h[(k + 1, k)] = beta;
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (eigenvalues only).
fn hqr(h: &mut Mat) -> Result<Vec<Complex64>> {
    let nn = h.rows();
    let eps = f64::EPSILON;
    let mut wr = vec![0.0; nn];
    let mut wi = vec![0.0; nn];
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let mut exshift = 0.0;
    let mut n = nn as isize - 1;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 60 * nn.max(1);
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut x, mut y, mut w);

    while n >= 0 {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            // one root found
            h[(nu, nu)] += exshift;
            wr[nu] = h[(nu, nu)];
            wi[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // two roots found
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = wr[nu - 1];
                if z != 0.0 {
                    wr[nu] = x - w / z;
                }
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            if iter == 10 {
                // exceptional shift
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                return Err(OsfError::NoConvergence(format!("QR iteration exceeded {max_total} steps")));
            }
            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nu {
                h[(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[(i, i - 3)] = 0.0;
                }
            }
            // double QR step on rows l..=n, columns m..=n
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[(k, k - 1)] = -s * x;
                    } else if l != m {
                        h[(k, k - 1)] = -h[(k, k - 1)];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[(k, j)] + q * h[(k + 1, j)];
                        if notlast {
                            p += r * h[(k + 2, j)];
                            h[(k + 2, j)] -= p * z;
                        }
                        h[(k, j)] -= p * x;
                        h[(k + 1, j)] -= p * y;
                    }
                    for i in 0..=nu.min(k + 3) {
                        p = x * h[(i, k)] + y * h[(i, k + 1)];
                        if notlast {
                            p += z * h[(i, k + 2)];
                            h[(i, k + 2)] -= p * r;
                        }
                        h[(i, k)] -= p;
                        h[(i, k + 1)] -= p * q;
                    }
                }
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}
