//! Observer design for single-output systems: observability, Ackermann pole
//! placement, diagonalisation-conditioning of the closed loop, and a
//! randomised search over target spectra.

use crate::error::{invalid, OsfError, Result};
use crate::numerics::{cond2_complex, eig_general, eig_vectors, lu_solve, singular_values, CMat, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// [C; CA; …; CA^{n−1}] and its numerical rank (threshold 1e-8·σ_max).
pub fn observability_matrix(a: &Mat, c: &Mat) -> Result<(Mat, usize)> {
    let n = a.rows();
    if !a.is_square() || c.cols() != n {
        return invalid(format!("observability: A {:?}, C {:?}", a.shape(), c.shape()));
    }
    let p = c.rows();
    let mut o = Mat::zeros(n * p, n);
    let mut block = c.clone();
    for k in 0..n {
        for i in 0..p {
            o.row_mut(k * p + i).copy_from_slice(block.row(i));
        }
        block = block.mul(a);
    }
    let s = singular_values(&o);
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = if smax == 0.0 { 0 } else { s.iter().filter(|&&v| v > 1e-8 * smax).count() };
    Ok((o, rank))
}

/// Real coefficients p_0..p_n (ascending, p_n = 1) of Π(λ − λ_j).
pub fn poly_from_roots(roots: &[Complex64]) -> Result<Vec<f64>> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= r * ck;
        }
        c = next;
    }
    let scale = c.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    if c.iter().any(|z| z.im.abs() > 1e-9 * scale) {
        return invalid("target poles are not closed under conjugation");
    }
    Ok(c.into_iter().map(|z| z.re).collect())
}

/// Characteristic polynomial (ascending, monic) by Faddeev–LeVerrier.
pub fn charpoly(a: &Mat) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Mat::zeros(n, n);
    for k in 1..=n {
        let mut next = a.mul(&m);
        for i in 0..n {
            next[(i, i)] += coeffs[n - k + 1];
        }
        m = next;
        let am = a.mul(&m);
        let tr: f64 = (0..n).map(|i| am[(i, i)]).sum();
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

/// Ackermann gain and the conditioning of the observability matrix it inverted.
#[derive(Clone, Debug)]
pub struct AckermannGain {
    pub l: Mat,
    pub cond_observability: f64,
    /// cond(O) beyond 1e12: the placement may be inaccurate.
    pub ill_conditioned: bool,
}

/// L = p(A)·O⁻¹·e_n, placing the eigenvalues of A − Lc at `targets`.
pub fn ackermann_gain(a: &Mat, c: &Mat, targets: &[Complex64]) -> Result<AckermannGain> {
    let n = a.rows();
    if c.rows() != 1 {
        return invalid("Ackermann placement needs a single output row");
    }
    if targets.len() != n {
        return invalid(format!("{} targets for a {n}-dimensional system", targets.len()));
    }
    let (o, rank) = observability_matrix(a, c)?;
    if rank < n {
        return Err(OsfError::RankDeficient { rank, required: n });
    }
    let p = poly_from_roots(targets)?;
    // Horner: p(A) = (((A + p_{n−1})A + p_{n−2}) … )
    let mut pa = Mat::identity(n);
    for &pk in p[..n].iter().rev() {
        pa = pa.mul(a);
        for i in 0..n {
            pa[(i, i)] += pk;
        }
    }
    let mut e = vec![0.0; n];
    e[n - 1] = 1.0;
    let v = lu_solve(&o, &e)?;
    let l = Mat::column_vector(&pa.matvec(&v));
    let cond = crate::numerics::cond2(&o);
    Ok(AckermannGain { l, cond_observability: cond, ill_conditioned: cond > 1e12 })
}

/// A closed loop A − LC and its figures of merit.
#[derive(Clone, Debug)]
pub struct ObserverSolution {
    pub l: Mat,
    pub eigenvalues: Vec<Complex64>,
    /// cond₂ of the unit-column eigenvector matrix (an upper bound on κ_diag); +∞ when near-defective.
    pub kappa: f64,
    pub gain_norm: f64,
}

fn is_normal(m: &Mat) -> bool {
    let t = m.transpose();
    let d = m.mul(&t).sub(&t.mul(m)).max_abs();
    d <= 1e-12 * m.max_abs().powi(2).max(f64::MIN_POSITIVE)
}

pub fn closed_loop(a: &Mat, c: &Mat, l: &Mat) -> Result<Mat> {
    if l.rows() != a.rows() || l.cols() != c.rows() || c.cols() != a.rows() {
        return invalid(format!("closed loop: A {:?}, C {:?}, L {:?}", a.shape(), c.shape(), l.shape()));
    }
    Ok(a.sub(&l.mul(c)))
}

pub fn eval_qstar(a: &Mat, c: &Mat, l: &Mat) -> Result<ObserverSolution> {
    let m = closed_loop(a, c, l)?;
    let gain_norm = l.frobenius_norm();
    if is_normal(&m) {
        return Ok(ObserverSolution { l: l.clone(), eigenvalues: eig_general(&m)?, kappa: 1.0, gain_norm });
    }
    match eig_vectors(&m) {
        Ok((vals, vecs)) => {
            let kappa = cond2_complex(&vecs).max(1.0);
            Ok(ObserverSolution { l: l.clone(), eigenvalues: vals, kappa, gain_norm })
        }
        Err(OsfError::IllConditioned { .. }) => {
            Ok(ObserverSolution { l: l.clone(), eigenvalues: eig_general(&m)?, kappa: f64::INFINITY, gain_norm })
        }
        Err(e) => Err(e),
    }
}

/// Σ = [lo, hi] ∪ {1} ∪ {|z| ≤ disk_radius}, any part optional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralConstraint {
    pub interval: Option<(f64, f64)>,
    pub include_one: bool,
    pub disk_radius: f64,
}

impl SpectralConstraint {
    /// [0, 1−ρ] ∪ {1} ∪ D_{1−γ}.
    pub fn from_rho_gamma(rho: f64, gamma: f64) -> Result<Self> {
        if !(0.0 <= rho && rho <= gamma && gamma <= 1.0) {
            return invalid(format!("need 0 ≤ ρ ≤ γ ≤ 1, got ρ={rho}, γ={gamma}"));
        }
        Ok(SpectralConstraint { interval: Some((0.0, 1.0 - rho)), include_one: true, disk_radius: 1.0 - gamma })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        SpectralConstraint { interval: Some((lo, hi)), include_one: false, disk_radius: 0.0 }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let tol = 1e-9;
        if z.norm() <= self.disk_radius + tol && self.disk_radius > 0.0 {
            return true;
        }
        if self.include_one && (z - 1.0).norm() <= tol {
            return true;
        }
        match self.interval {
            Some((lo, hi)) => z.im.abs() <= tol && z.re >= lo - tol && z.re <= hi + tol,
            None => false,
        }
    }

    fn sample_real(&self, rng: &mut ChaCha8Rng) -> Option<f64> {
        match self.interval {
            Some((lo, hi)) => Some(lo + (hi - lo) * rng.random::<f64>()),
            None if self.disk_radius > 0.0 => Some(self.disk_radius * (2.0 * rng.random::<f64>() - 1.0)),
            None => None,
        }
    }

    fn sample_pair(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let r = self.disk_radius * rng.random::<f64>().sqrt();
        Complex64::from_polar(r, std::f64::consts::PI * rng.random::<f64>())
    }
}

/// One evaluated candidate of [`qstar_search`].
#[derive(Clone, Debug)]
pub struct QstarTrial {
    pub targets: Vec<Complex64>,
    /// +∞ when placement failed or the closed loop is near-defective.
    pub kappa: f64,
}

#[derive(Clone, Debug)]
pub struct QstarSearch {
    pub best: ObserverSolution,
    pub trials: Vec<QstarTrial>,
}

fn evaluate(a: &Mat, c: &Mat, targets: &[Complex64]) -> Option<ObserverSolution> {
    let g = ackermann_gain(a, c, targets).ok()?;
    eval_qstar(a, c, &g.l).ok()
}

/// Randomised multi-start search for a gain with small κ_diag and spectrum in Σ.
///
/// Eigenvalues of A already in Σ stay put; the others are replaced by samples:
/// real values on the interval part and conjugate pairs uniform on the disk,
/// with the number of pairs drawn uniformly per trial. `extra` candidate
/// spectra (e.g. from an earlier search) are evaluated first when they lie in Σ.
pub fn qstar_search(
    a: &Mat,
    c: &Mat,
    sigma: &SpectralConstraint,
    trials: usize,
    seed: u64,
    extra: &[Vec<Complex64>],
) -> Result<QstarSearch> {
    let n = a.rows();
    let (_, rank) = observability_matrix(a, c)?;
    if rank < n {
        return Err(OsfError::RankDeficient { rank, required: n });
    }
    let eig = eig_general(a)?;
    let (fixed, moved): (Vec<Complex64>, Vec<Complex64>) = eig.iter().partition(|z| sigma.contains(**z));
    if moved.is_empty() {
        let sol = eval_qstar(a, c, &Mat::zeros(n, 1))?;
        let trial = QstarTrial { targets: eig.clone(), kappa: sol.kappa };
        return Ok(QstarSearch { best: sol, trials: vec![trial] });
    }
    let m = moved.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::with_capacity(trials + extra.len());
    let mut best: Option<ObserverSolution> = None;
    let mut consider = |targets: Vec<Complex64>, log: &mut Vec<QstarTrial>| {
        let sol = evaluate(a, c, &targets);
        let kappa = sol.as_ref().map_or(f64::INFINITY, |s| s.kappa);
        if let Some(s) = sol {
            if s.kappa.is_finite() && best.as_ref().is_none_or(|b| s.kappa < b.kappa) {
                best = Some(s);
            }
        }
        log.push(QstarTrial { targets, kappa });
    };
    for t in extra {
        if t.len() == n && t.iter().all(|z| sigma.contains(*z)) {
            consider(t.clone(), &mut log);
        }
    }
    let max_pairs = if sigma.disk_radius > 0.0 { m / 2 } else { 0 };
    for _ in 0..trials {
        let pairs = if sigma.interval.is_none() && sigma.disk_radius > 0.0 {
            rng.random_range((m / 2)..=max_pairs.max(m / 2))
        } else {
            rng.random_range(0..=max_pairs)
        };
        let mut targets = fixed.clone();
        for _ in 0..pairs {
            let z = sigma.sample_pair(&mut rng);
            targets.push(z);
            targets.push(z.conj());
        }
        let mut ok = true;
        for _ in 0..m - 2 * pairs {
            match sigma.sample_real(&mut rng) {
                Some(x) => targets.push(Complex64::new(x, 0.0)),
                None => ok = false,
            }
        }
        if ok {
            consider(targets, &mut log);
        }
    }
    match best {
        Some(best) => Ok(QstarSearch { best, trials: log }),
        None => Err(OsfError::SearchFailure(format!("no finite-κ placement in {} trials", log.len()))),
    }
}

/// Gain norm and κ of the cyclic-shift observer from polynomial coefficients
/// and a row-rescaled Vandermonde matrix.
///
/// For A the shift with e₁ᵀA^k = e_{k+1}ᵀ and c = e₁ᵀ the observability matrix is
/// the identity and L = p(A)e_n, so ‖L‖² = (p_0 + p_n)² + Σ_{0<j<n} p_j².
pub fn permutation_closed_form(targets: &[Complex64]) -> Result<(f64, f64)> {
    let n = targets.len();
    if n < 2 {
        return invalid("need at least two targets");
    }
    for i in 0..n {
        if (targets[i].powu(n as u32) - 1.0).norm() < 1e-12 {
            return Err(OsfError::Domain(format!("target {} is an n-th root of unity", targets[i])));
        }
        for j in 0..i {
            if (targets[i] - targets[j]).norm() < 1e-12 {
                return invalid("targets must be distinct");
            }
        }
    }
    let p = poly_from_roots(targets)?;
    let norm2 = (p[0] + p[n]).powi(2) + p[1..n].iter().map(|v| v * v).sum::<f64>();
    let v =
        CMat::from_fn(n, n, |i, j| targets[i].powu(j as u32) / (Complex64::new(1.0, 0.0) - targets[i].powu(n as u32)));
    Ok((norm2.sqrt(), cond2_complex(&v)))
}

/// x̃_{t+1} = (A − LC)x̃_t + Bu_t + Ly_t, ỹ_t = Cx̃_t; returns flat (x̃, ỹ).
pub fn observer_rollout(
    a: &Mat,
    b: &Mat,
    c: &Mat,
    l: &Mat,
    x0: &[f64],
    u: &[f64],
    y: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let at = closed_loop(a, c, l)?;
    let (n, di, dout) = (a.rows(), b.cols(), c.rows());
    if b.rows() != n || x0.len() != n || dout == 0 || !y.len().is_multiple_of(dout) {
        return invalid("observer rollout dimension mismatch");
    }
    let t_len = y.len() / dout;
    if u.len() != t_len * di {
        return invalid(format!("inputs have length {}, expected {}", u.len(), t_len * di));
    }
    let mut x = x0.to_vec();
    let (mut xs, mut ys) = (Vec::with_capacity(t_len * n), Vec::with_capacity(t_len * dout));
    for t in 0..t_len {
        xs.extend_from_slice(&x);
        ys.extend(c.matvec(&x));
        let mut next = at.matvec(&x);
        if di > 0 {
            crate::numerics::axpy(1.0, &b.matvec(&u[t * di..(t + 1) * di]), &mut next);
        }
        crate::numerics::axpy(1.0, &l.matvec(&y[t * dout..(t + 1) * dout]), &mut next);
        x = next;
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{cyclic_shift, gaussian_inputs, simulate_lds, LdsSystem};
    use rand_distr::StandardNormal;

    fn c64(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn e1(n: usize) -> Mat {
        Mat::from_fn(1, n, |_, j| if j == 0 { 1.0 } else { 0.0 })
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re));
        v.into_iter().map(|z| z.re).collect()
    }

    #[test]
    fn observability_examples() {
        let (o, r) = observability_matrix(&cyclic_shift(5), &e1(5)).unwrap();
        assert_eq!(o.as_slice(), Mat::identity(5).as_slice());
        assert_eq!(r, 5);
        assert_eq!(observability_matrix(&cyclic_shift(3), &Mat::zeros(1, 3)).unwrap().1, 0);
        assert_eq!(observability_matrix(&Mat::identity(2), &Mat::row_vector(&[1.0, 0.0])).unwrap().1, 1);
    }

    #[test]
    fn ackermann_examples() {
        // nilpotent pair is already placed at {0, 0}
        let a = Mat::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let g = ackermann_gain(&a, &Mat::row_vector(&[1.0, 0.0]), &c64(&[0.0, 0.0])).unwrap();
        assert_eq!(g.l.max_abs(), 0.0);
        // diag(1, 0.5), c = [1, 1] to {0.9, 0.4}: tr = 1.5 − l1 − l2 = 1.3, det = 0.5 − 0.5 l1 − l2 = 0.36
        let a = Mat::diag(&[1.0, 0.5]);
        let c = Mat::row_vector(&[1.0, 1.0]);
        let g = ackermann_gain(&a, &c, &c64(&[0.9, 0.4])).unwrap();
        assert!((g.l[(0, 0)] - 0.12).abs() < 1e-12 && (g.l[(1, 0)] - 0.08).abs() < 1e-12);
        // targets equal to the current spectrum leave the characteristic polynomial unchanged
        let a = Mat::from_rows(&[&[0.3, 0.2, 0.0], &[-0.1, 0.5, 0.4], &[0.2, 0.0, -0.6]]);
        let c = Mat::row_vector(&[1.0, 0.5, -0.2]);
        let eig = eig_general(&a).unwrap();
        let g = ackermann_gain(&a, &c, &eig).unwrap();
        let cp = charpoly(&closed_loop(&a, &c, &g.l).unwrap());
        let want = poly_from_roots(&eig).unwrap();
        assert!(cp.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-8));
    }

    #[test]
    fn ackermann_rejects_unobservable_and_complex_unpaired() {
        let e = ackermann_gain(&Mat::identity(2), &Mat::row_vector(&[1.0, 0.0]), &c64(&[0.1, 0.2])).unwrap_err();
        assert!(matches!(e, OsfError::RankDeficient { rank: 1, required: 2 }));
        let t = vec![Complex64::new(0.1, 0.2), Complex64::new(0.1, 0.3)];
        assert!(ackermann_gain(&cyclic_shift(2), &e1(2), &t).is_err());
    }

    #[test]
    fn placement_is_exact_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in 2..=6 {
            let a = Mat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
            let c = Mat::from_fn(1, d, |_, _| rng.sample(StandardNormal));
            let t: Vec<f64> = (0..d).map(|k| -0.9 + 1.8 * (k as f64 + rng.random::<f64>() * 0.5) / d as f64).collect();
            let g = ackermann_gain(&a, &c, &c64(&t)).unwrap();
            let got = sorted_re(eig_general(&closed_loop(&a, &c, &g.l).unwrap()).unwrap());
            let mut want = t.clone();
            want.sort_by(f64::total_cmp);
            for (x, y) in got.iter().zip(&want) {
                assert!((x - y).abs() < 1e-6, "d={d}: {got:?} vs {want:?}");
            }
        }
    }

    #[test]
    fn kappa_examples() {
        let s = Mat::from_rows(&[&[2.0, 1.0], &[1.0, -1.0]]);
        let sol = eval_qstar(&s, &Mat::row_vector(&[1.0, 0.0]), &Mat::zeros(2, 1)).unwrap();
        assert!((sol.kappa - 1.0).abs() < 1e-6);
        let j = Mat::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(eval_qstar(&j, &Mat::row_vector(&[1.0, 0.0]), &Mat::zeros(2, 1)).unwrap().kappa.is_infinite());
    }

    #[test]
    fn gain_norm_bounded_by_kappa() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let d = 3;
            let a = Mat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.5);
            let c = Mat::from_fn(1, d, |_, _| rng.sample(StandardNormal));
            let t = c64(&[0.1, 0.4, -0.3]);
            let g = ackermann_gain(&a, &c, &t).unwrap();
            let sol = eval_qstar(&a, &c, &g.l).unwrap();
            let smin = singular_values(&c)[0];
            assert!(sol.gain_norm <= 2.0 * sol.kappa / smin, "{} vs {}", sol.gain_norm, sol.kappa);
        }
    }

    #[test]
    fn permutation_closed_form_matches_direct_gain() {
        let (norm, _) = permutation_closed_form(&c64(&[0.0, 0.5])).unwrap();
        assert!((norm * norm - 1.25).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=8 {
            let t: Vec<f64> = (0..n).map(|k| -0.9 + 1.8 * (k as f64 + rng.random::<f64>() * 0.9) / n as f64).collect();
            let (norm, _) = permutation_closed_form(&c64(&t)).unwrap();
            let g = ackermann_gain(&cyclic_shift(n), &e1(n), &c64(&t)).unwrap();
            assert!((norm - g.l.frobenius_norm()).abs() < 1e-8, "n={n}");
        }
        assert!(permutation_closed_form(&c64(&[1.0, 0.5])).is_err());
    }

    #[test]
    fn closed_form_kappa_uses_left_eigenvectors() {
        for n in [2usize, 3, 5, 8] {
            let t: Vec<f64> = (0..n).map(|k| 0.9 * (k as f64 + 0.5) / n as f64).collect();
            let (a, c) = (cyclic_shift(n), e1(n));
            let g = ackermann_gain(&a, &c, &c64(&t)).unwrap();
            let m = closed_loop(&a, &c, &g.l).unwrap();
            // reversed Vandermonde rows (λ^{n−1}, …, λ, 1) are left eigenvectors
            for &lam in &t {
                let w: Vec<f64> = (0..n).map(|j| lam.powi((n - 1 - j) as i32)).collect();
                let wa = m.tmatvec(&w);
                for j in 0..n {
                    assert!((wa[j] - lam * w[j]).abs() < 1e-9 * (1.0 + g.l.max_abs()), "n={n}");
                }
            }
            // same eigenbasis, different normalisation: unit columns give the smaller bound
            let (_, closed) = permutation_closed_form(&c64(&t)).unwrap();
            let eval = eval_qstar(&a, &c, &g.l).unwrap().kappa;
            assert!(eval <= closed && closed <= 2.0 * eval, "n={n}: {eval} vs {closed}");
        }
    }

    #[test]
    fn search_keeps_feasible_spectrum() {
        let a = Mat::diag(&[0.2, 0.5, 0.8]);
        let c = Mat::row_vector(&[1.0, 1.0, 1.0]);
        let sigma = SpectralConstraint::interval(0.0, 0.9);
        let r = qstar_search(&a, &c, &sigma, 10, 0, &[]).unwrap();
        assert_eq!(r.best.gain_norm, 0.0);
        assert!((r.best.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn search_is_deterministic_and_monotone() {
        let n = 4;
        let (a, c) = (cyclic_shift(n), e1(n));
        let small = SpectralConstraint::interval(0.0, 0.5);
        let big = SpectralConstraint::interval(0.0, 0.9);
        let r1 = qstar_search(&a, &c, &small, 100, 3, &[]).unwrap();
        let r2 = qstar_search(&a, &c, &small, 100, 3, &[]).unwrap();
        assert_eq!(r1.best.kappa, r2.best.kappa);
        let prior: Vec<Vec<Complex64>> = r1.trials.iter().map(|t| t.targets.clone()).collect();
        let rb = qstar_search(&a, &c, &big, 100, 3, &prior).unwrap();
        assert!(rb.best.kappa <= r1.best.kappa);
    }

    #[test]
    fn permutation_four_is_badly_conditioned() {
        let n = 4;
        let r = qstar_search(&cyclic_shift(n), &e1(n), &SpectralConstraint::interval(0.0, 0.9), 500, 1, &[]).unwrap();
        assert!(r.best.kappa >= 10.0, "kappa {}", r.best.kappa);
    }

    #[test]
    fn observer_reproduces_noiseless_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = 6;
        let a = Mat::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (2.0 * (d as f64).sqrt()));
        let b = Mat::from_fn(d, 1, |_, _| rng.sample(StandardNormal));
        let c = Mat::from_fn(1, d, |_, _| rng.sample(StandardNormal));
        let x0: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let sys = LdsSystem::new(a.clone(), b.clone(), c.clone(), x0.clone()).unwrap();
        let u = gaussian_inputs(200, 1, 9);
        let y = simulate_lds(&sys, &u, None, 200).unwrap().y;
        let g = ackermann_gain(&a, &c, &c64(&[0.1, 0.2, 0.3, -0.1, -0.2, 0.5])).unwrap();
        let (_, yt) = observer_rollout(&a, &b, &c, &g.l, &x0, &u, &y).unwrap();
        for (p, q) in yt.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0));
        }
        // L = 0 is open-loop simulation
        let (_, open) = observer_rollout(&a, &b, &c, &Mat::zeros(d, 1), &x0, &u, &y).unwrap();
        assert_eq!(open, y);
    }
}
