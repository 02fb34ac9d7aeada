use super::mat::Mat;
use crate::error::{invalid, Result};

const MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and a matrix whose columns are the
/// corresponding orthonormal eigenvectors.
pub fn sym_eigh(s: &Mat) -> Result<(Vec<f64>, Mat)> {
    if !s.is_square() {
        return invalid(format!("sym_eigh needs a square matrix, got {}x{}", s.rows(), s.cols()));
    }
    if !s.is_finite() {
        return invalid("sym_eigh input has non-finite entries");
    }
    let n = s.rows();
    let scale = s.max_abs();
    for i in 0..n {
        for j in 0..i {
            if (s[(i, j)] - s[(j, i)]).abs() > 1e-12 * scale {
                return invalid(format!("sym_eigh input is not symmetric at ({i},{j})"));
            }
        }
    }
    // symmetrise exactly so rounding in the input does not bias the rotations
    let mut a = Mat::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]));
    // rows of `vt` are the eigenvectors; row-major rotations stay contiguous
    let mut vt = Mat::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)] * a[(i, j)]).sum();
        let total = a.frobenius_norm();
        if off.sqrt() <= f64::EPSILON * total * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                // skip negligible couplings (classic threshold from Rutishauser)
                if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()).max(f64::MIN_POSITIVE) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut vt, p, q, c, sn, t, apq);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = vt.row(k);
        // sign convention: first nonnegligible component positive
        let lead = v.iter().copied().find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sgn = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sgn * v[i];
        }
    }
    Ok((values, vectors))
}

#[allow(clippy::too_many_arguments)]
fn rotate(a: &mut Mat, vt: &mut Mat, p: usize, q: usize, c: f64, s: f64, t: f64, apq: f64) {
    let n = a.rows();
    a[(p, p)] -= t * apq;
    a[(q, q)] += t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp;
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq;
    }
    let cols = vt.cols();
    let data = vt.as_mut_slice();
    let (lo, hi) = data.split_at_mut(q * cols);
    let rp = &mut lo[p * cols..(p + 1) * cols];
    let rq = &mut hi[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let vp = *x;
        let vq = *y;
        *x = c * vp - s * vq;
        *y = s * vp + c * vq;
    }
}
