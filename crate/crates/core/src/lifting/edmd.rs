use crate::error::{invalid, Result};
use crate::filters::FilterBank;
use crate::numerics::{lstsq_rank, Mat};

/// Linear model z_{t+1} ≈ A z_t, y_t ≈ C z_t fitted by least squares.
#[derive(Clone, Debug)]
pub struct EdmdFit {
    pub a: Mat,
    pub c: Mat,
    /// Snapshot matrix was numerically rank deficient; the minimum-norm solution was used.
    pub rank_deficient: bool,
}

impl EdmdFit {
    /// ŷ_{t+1} = C A z_t.
    pub fn predict(&self, z: &[f64]) -> Vec<f64> {
        self.c.matvec(&self.a.matvec(z))
    }
}

/// `z` is t × n (one lifted snapshot per row), `y` is t × d_Y.
pub fn edmd_fit(z: &Mat, y: &Mat) -> Result<EdmdFit> {
    let (t, n) = z.shape();
    if y.rows() != t {
        return invalid(format!("{t} snapshots but {} observations", y.rows()));
    }
    if t < n + 1 {
        return invalid(format!("eDMD needs at least {} snapshots, got {t}", n + 1));
    }
    let past = Mat::from_fn(t - 1, n, |i, j| z[(i, j)]);
    let next = Mat::from_fn(t - 1, n, |i, j| z[(i + 1, j)]);
    let (at, r1) = lstsq_rank(&past, &next)?;
    let (ct, r2) = lstsq_rank(z, y)?;
    Ok(EdmdFit { a: at.transpose(), c: ct.transpose(), rank_deficient: r1 < n || r2 < n })
}

/// Filter features of the lifted history ending at row `t` (inclusive), newest first.
///
/// `lifted` is flat T × n. Output is `bank.count() × n`, filter-major.
pub fn sfedmd_features(bank: &FilterBank, lifted: &[f64], n: usize, t: usize) -> Vec<f64> {
    let k = (t + 1).min(bank.len());
    let mut window = Vec::with_capacity(k * n);
    for s in (t + 1 - k..=t).rev() {
        window.extend_from_slice(&lifted[s * n..(s + 1) * n]);
    }
    let mut out = vec![0.0; bank.count() * n];
    bank.features_into(&window, n, &mut out);
    out
}

/// Least-squares filter coefficients N_1..N_k (each d_Y × n) with
/// targets[t] ≈ Σ_i N_i · feature_i(t), features from [`sfedmd_features`].
pub fn sfedmd_fit(bank: &FilterBank, lifted: &[f64], n: usize, targets: &[f64], d_y: usize) -> Result<Vec<Mat>> {
    if n == 0 || d_y == 0 || !lifted.len().is_multiple_of(n) || !targets.len().is_multiple_of(d_y) {
        return invalid("lifted/target lengths do not match their dimensions");
    }
    let t_len = lifted.len() / n;
    if targets.len() / d_y != t_len {
        return invalid("lifted sequence and targets differ in length");
    }
    let width = bank.count() * n;
    if t_len < width {
        return invalid(format!("{t_len} samples for {width} unknowns"));
    }
    let mut x = Mat::zeros(t_len, width);
    for t in 0..t_len {
        x.row_mut(t).copy_from_slice(&sfedmd_features(bank, lifted, n, t));
    }
    let y = Mat::from_vec(t_len, d_y, targets.to_vec())?;
    let (w, _) = lstsq_rank(&x, &y)?;
    Ok((0..bank.count()).map(|i| Mat::from_fn(d_y, n, |r, c| w[(i * n + c, r)])).collect())
}
