//! The observation spectral filtering predictor, its losses and gradients.
//!
//! A prediction is linear in the parameters: ŷ = W x, where the feature vector
//! x stacks, in order,
//!
//! 1. input lags u_{t−1..t−m+1}                      ((m−1)·d_in)
//! 2. filtered inputs ⟨φ_i, u_{t−2..}⟩ · σ_i^{1/4}     (h·d_in)
//! 3. observation lags y_{t−1..t−m}                  (m·d_out)
//! 4. filtered observations ⟨φ_i, y_{t−1..}⟩ · σ_i^{1/4} (h·d_out)
//!
//! and W = [J_1..J_{m−1} | M_1..M_h | P_1..P_m | N_1..N_h]. Both filter windows
//! hold T−1 entries.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::filters::FilterBank;
use crate::numerics::{dot, norm, Mat};

/// Which parameter blocks are trainable; the rest stay exactly zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// J, M, P, N all learned.
    Full,
    /// J, M ≡ 0: filters over observations plus observation lags.
    ObservationsOnly,
    /// Only the observation lags P.
    RegressionOnly,
    /// Only N, plus the fixed preconditioning term −Σ c_j y_{t−j}.
    Chebyshev,
    /// N ≡ 0: filters over inputs only, with observation lags.
    OpenLoop,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        Ok(match s {
            "full" => Mode::Full,
            "observations_only" => Mode::ObservationsOnly,
            "regression_only" => Mode::RegressionOnly,
            "chebyshev" => Mode::Chebyshev,
            "open_loop" => Mode::OpenLoop,
            other => return invalid(format!("unknown predictor mode '{other}'")),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::ObservationsOnly => "observations_only",
            Mode::RegressionOnly => "regression_only",
            Mode::Chebyshev => "chebyshev",
            Mode::OpenLoop => "open_loop",
        }
    }

    /// Trainable flags for (J, M, P, N).
    pub fn blocks(self) -> [bool; 4] {
        match self {
            Mode::Full => [true, true, true, true],
            Mode::ObservationsOnly => [false, false, true, true],
            Mode::RegressionOnly => [false, false, true, false],
            Mode::Chebyshev => [false, false, false, true],
            Mode::OpenLoop => [true, true, true, false],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    /// Filter horizon; filters have length T−1.
    pub t: usize,
    pub m: usize,
    pub h: usize,
    pub d_in: usize,
    pub d_out: usize,
    /// Prediction clip radius.
    pub r: f64,
    /// Parameter-ball diameter used by projected optimizers.
    pub d: f64,
    pub mode: Mode,
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t < 3 {
            return invalid("predictor horizon T must be at least 3");
        }
        if self.d_out == 0 {
            return invalid("d_out must be positive");
        }
        if !(self.r > 0.0) {
            return invalid("clip radius R must be positive");
        }
        if !(self.d > 0.0) {
            return invalid("diameter D must be positive");
        }
        if self.h >= self.t {
            return invalid("filter count h must be below T");
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.m, self.h, self.d_in, self.d_out)
    }

    /// Degree of the Chebyshev preconditioner, ⌈log₂ T⌉.
    pub fn chebyshev_degree(&self) -> usize {
        (usize::BITS - (self.t - 1).leading_zeros()) as usize
    }

    /// How far back the input history must reach (in steps before t).
    pub fn u_history_len(&self) -> usize {
        (self.m.saturating_sub(1)).max(self.t)
    }

    /// How far back the observation history must reach.
    pub fn y_history_len(&self) -> usize {
        let cheb = if self.mode == Mode::Chebyshev { self.chebyshev_degree() } else { 0 };
        self.m.max(self.t - 1).max(cheb)
    }
}

/// Column offsets of the four parameter blocks inside W.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub m: usize,
    pub h: usize,
    pub d_in: usize,
    pub d_out: usize,
}

impl Layout {
    pub fn new(m: usize, h: usize, d_in: usize, d_out: usize) -> Self {
        Layout { m, h, d_in, d_out }
    }

    pub fn j_len(&self) -> usize {
        self.m.saturating_sub(1) * self.d_in
    }

    pub fn m_len(&self) -> usize {
        self.h * self.d_in
    }

    pub fn p_len(&self) -> usize {
        self.m * self.d_out
    }

    pub fn n_len(&self) -> usize {
        self.h * self.d_out
    }

    /// Start column of each block (J, M, P, N).
    pub fn offsets(&self) -> [usize; 4] {
        let j = 0;
        let m = j + self.j_len();
        let p = m + self.m_len();
        let n = p + self.p_len();
        [j, m, p, n]
    }

    pub fn block_ranges(&self) -> [std::ops::Range<usize>; 4] {
        let o = self.offsets();
        [o[0]..o[0] + self.j_len(), o[1]..o[1] + self.m_len(), o[2]..o[2] + self.p_len(), o[3]..o[3] + self.n_len()]
    }

    pub fn width(&self) -> usize {
        self.j_len() + self.m_len() + self.p_len() + self.n_len()
    }

    /// Per-column trainable mask for a mode.
    pub fn column_mask(&self, mode: Mode) -> Vec<bool> {
        let flags = mode.blocks();
        let mut mask = vec![false; self.width()];
        for (b, r) in self.block_ranges().into_iter().enumerate() {
            for c in r {
                mask[c] = flags[b];
            }
        }
        mask
    }
}

/// Parameters Θ = (J, M, P, N) stored as one d_out × F matrix W.
#[derive(Clone, Debug, PartialEq)]
pub struct OsfParams {
    layout: Layout,
    w: Mat,
}

/// JSON checkpoint of [`OsfParams`], each block flattened row-major per lag/filter.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub m: usize,
    pub h: usize,
    pub dims: [usize; 2],
    #[serde(rename = "J")]
    pub j: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    pub mm: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<f64>>,
}

impl OsfParams {
    pub fn zeros(layout: Layout) -> Self {
        OsfParams { layout, w: Mat::zeros(layout.d_out, layout.width()) }
    }

    pub fn from_matrix(layout: Layout, w: Mat) -> Result<Self> {
        if w.shape() != (layout.d_out, layout.width()) {
            return invalid(format!(
                "parameter matrix must be {}x{}, got {}x{}",
                layout.d_out,
                layout.width(),
                w.rows(),
                w.cols()
            ));
        }
        Ok(OsfParams { layout, w })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn matrix(&self) -> &Mat {
        &self.w
    }

    pub fn flat(&self) -> &[f64] {
        self.w.as_slice()
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        self.w.as_mut_slice()
    }

    pub fn norm(&self) -> f64 {
        self.w.frobenius_norm()
    }

    fn block(&self, which: usize, k: usize, d: usize) -> Mat {
        let start = self.layout.offsets()[which] + k * d;
        Mat::from_fn(self.layout.d_out, d, |r, c| self.w[(r, start + c)])
    }

    fn set_block(&mut self, which: usize, k: usize, d: usize, b: &Mat) {
        let start = self.layout.offsets()[which] + k * d;
        for r in 0..self.layout.d_out {
            for c in 0..d {
                self.w[(r, start + c)] = b[(r, c)];
            }
        }
    }

    /// J_{k+1}, d_out × d_in.
    pub fn j(&self, k: usize) -> Mat {
        self.block(0, k, self.layout.d_in)
    }

    /// M_{k+1}, d_out × d_in.
    pub fn m(&self, k: usize) -> Mat {
        self.block(1, k, self.layout.d_in)
    }

    /// P_{k+1}, d_out × d_out.
    pub fn p(&self, k: usize) -> Mat {
        self.block(2, k, self.layout.d_out)
    }

    /// N_{k+1}, d_out × d_out.
    pub fn n(&self, k: usize) -> Mat {
        self.block(3, k, self.layout.d_out)
    }

    pub fn set_j(&mut self, k: usize, b: &Mat) {
        self.set_block(0, k, self.layout.d_in, b)
    }

    pub fn set_m(&mut self, k: usize, b: &Mat) {
        self.set_block(1, k, self.layout.d_in, b)
    }

    pub fn set_p(&mut self, k: usize, b: &Mat) {
        self.set_block(2, k, self.layout.d_out, b)
    }

    pub fn set_n(&mut self, k: usize, b: &Mat) {
        self.set_block(3, k, self.layout.d_out, b)
    }

    /// Zero every column a mode does not train.
    pub fn apply_mask(&mut self, mask: &[bool]) {
        let cols = self.w.cols();
        for r in 0..self.w.rows() {
            for (c, keep) in mask.iter().enumerate().take(cols) {
                if !keep {
                    self.w[(r, c)] = 0.0;
                }
            }
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let l = self.layout;
        let flat = |b: Mat| b.into_vec();
        Checkpoint {
            m: l.m,
            h: l.h,
            dims: [l.d_in, l.d_out],
            j: (0..l.m.saturating_sub(1)).map(|k| flat(self.j(k))).collect(),
            mm: (0..l.h).map(|k| flat(self.m(k))).collect(),
            p: (0..l.m).map(|k| flat(self.p(k))).collect(),
            n: (0..l.h).map(|k| flat(self.n(k))).collect(),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        let l = Layout::new(c.m, c.h, c.dims[0], c.dims[1]);
        let mut p = OsfParams::zeros(l);
        let check = |blocks: &Vec<Vec<f64>>, count: usize, cols: usize, name: &str| -> Result<()> {
            if blocks.len() != count || blocks.iter().any(|b| b.len() != l.d_out * cols) {
                return invalid(format!("checkpoint block {name} has the wrong shape"));
            }
            if blocks.iter().flatten().any(|x| !x.is_finite()) {
                return invalid(format!("checkpoint block {name} has non-finite entries"));
            }
            Ok(())
        };
        check(&c.j, l.m.saturating_sub(1), l.d_in, "J")?;
        check(&c.mm, l.h, l.d_in, "M")?;
        check(&c.p, l.m, l.d_out, "P")?;
        check(&c.n, l.h, l.d_out, "N")?;
        for (k, b) in c.j.iter().enumerate() {
            p.set_j(k, &Mat::from_vec(l.d_out, l.d_in, b.clone())?);
        }
        for (k, b) in c.mm.iter().enumerate() {
            p.set_m(k, &Mat::from_vec(l.d_out, l.d_in, b.clone())?);
        }
        for (k, b) in c.p.iter().enumerate() {
            p.set_p(k, &Mat::from_vec(l.d_out, l.d_out, b.clone())?);
        }
        for (k, b) in c.n.iter().enumerate() {
            p.set_n(k, &Mat::from_vec(l.d_out, l.d_out, b.clone())?);
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    L2,
    Squared,
}

pub fn loss(y_hat: &[f64], y: &[f64], kind: LossKind) -> f64 {
    let sq: f64 = y_hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    match kind {
        LossKind::L2 => sq.sqrt(),
        LossKind::Squared => sq,
    }
}

/// Coefficients c_1..c_n of the monic degree-n Chebyshev polynomial 2^{1−n} T_n:
/// c_j is the coefficient of x^{n−j}, so the preconditioning term is −Σ c_j y_{t−j}.
pub fn chebyshev_coeffs(n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    // power-basis coefficients, index = power
    let mut prev = vec![1.0];
    let mut cur = vec![0.0, 1.0];
    for _ in 1..n {
        let mut next = vec![0.0; cur.len() + 1];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += 2.0 * c;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = cur;
        cur = next;
    }
    let lead = cur[n];
    (1..=n).map(|j| cur[n - j] / lead).collect()
}

/// Builds feature vectors and evaluates the predictor for a fixed config and bank.
#[derive(Clone, Debug)]
pub struct FeatureMap {
    cfg: PredictorConfig,
    layout: Layout,
    mask: Vec<bool>,
    cheb: Vec<f64>,
}

impl FeatureMap {
    pub fn new(cfg: &PredictorConfig, bank: &FilterBank) -> Result<Self> {
        cfg.validate()?;
        if bank.horizon() != cfg.t {
            return invalid(format!("filter bank horizon {} differs from T={}", bank.horizon(), cfg.t));
        }
        if bank.count() < cfg.h {
            return invalid(format!("filter bank has {} filters, need {}", bank.count(), cfg.h));
        }
        let cheb = if cfg.mode == Mode::Chebyshev { chebyshev_coeffs(cfg.chebyshev_degree()) } else { Vec::new() };
        let layout = cfg.layout();
        Ok(FeatureMap { cfg: cfg.clone(), layout, mask: layout.column_mask(cfg.mode), cheb })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.cfg
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Feature vector x for histories `u_hist` (newest = u_{t−1}) and `y_hist` (newest = y_{t−1}).
    ///
    /// Blocks the mode does not train are left at zero.
    pub fn features(&self, bank: &FilterBank, u_hist: &[f64], y_hist: &[f64], x: &mut [f64]) {
        let l = self.layout;
        let flags = self.cfg.mode.blocks();
        let [oj, om, op, on] = l.offsets();
        x.iter_mut().for_each(|v| *v = 0.0);
        let din = l.d_in;
        let dout = l.d_out;
        let win = self.cfg.t - 1;
        if din > 0 {
            if flags[0] {
                let k = (l.m.saturating_sub(1) * din).min(u_hist.len());
                x[oj..oj + k].copy_from_slice(&u_hist[..k]);
            }
            if flags[1] && l.h > 0 && u_hist.len() > din {
                // window starts at u_{t−2}
                let src = &u_hist[din..];
                let k = (win * din).min(src.len());
                bank_features(bank, l.h, &src[..k], din, &mut x[om..om + l.h * din]);
            }
        }
        if flags[2] {
            let k = (l.m * dout).min(y_hist.len());
            x[op..op + k].copy_from_slice(&y_hist[..k]);
        }
        if flags[3] && l.h > 0 {
            let k = (win * dout).min(y_hist.len());
            bank_features(bank, l.h, &y_hist[..k], dout, &mut x[on..on + l.h * dout]);
        }
    }

    /// Fixed additive term of the prediction (nonzero only in Chebyshev mode).
    pub fn offset(&self, y_hist: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let d = self.layout.d_out;
        for (j, c) in self.cheb.iter().enumerate() {
            if (j + 1) * d > y_hist.len() {
                break;
            }
            for (o, y) in out.iter_mut().zip(&y_hist[j * d..(j + 1) * d]) {
                *o -= c * y;
            }
        }
    }

    /// Unclipped prediction W x + offset.
    pub fn raw_prediction(&self, params: &OsfParams, x: &[f64], offset: &[f64]) -> Vec<f64> {
        let w = params.matrix();
        (0..self.layout.d_out).map(|r| dot(w.row(r), x) + offset[r]).collect()
    }

    pub fn clip(&self, y: &mut [f64]) {
        clip_to_ball(y, self.cfg.r);
    }
}

fn bank_features(bank: &FilterBank, h: usize, hist: &[f64], dim: usize, out: &mut [f64]) {
    if h == bank.count() {
        bank.features_into(hist, dim, out);
    } else {
        let mut tmp = vec![0.0; bank.count() * dim];
        bank.features_into(hist, dim, &mut tmp);
        out.copy_from_slice(&tmp[..h * dim]);
    }
}

pub fn clip_to_ball(y: &mut [f64], r: f64) {
    let n = norm(y);
    if n > r {
        let s = r / n;
        y.iter_mut().for_each(|v| *v *= s);
    }
}

fn check_dims(params: &OsfParams, cfg: &PredictorConfig, u_hist: &[f64], y_hist: &[f64]) -> Result<()> {
    if params.layout() != cfg.layout() {
        return invalid("parameter layout does not match the predictor config");
    }
    if cfg.d_in == 0 {
        if !u_hist.is_empty() {
            return invalid("input history given but d_in = 0");
        }
    } else if !u_hist.len().is_multiple_of(cfg.d_in) {
        return invalid("input history length is not a multiple of d_in");
    }
    if !y_hist.len().is_multiple_of(cfg.d_out) {
        return invalid("observation history length is not a multiple of d_out");
    }
    Ok(())
}

/// Clipped prediction ŷ_t for newest-first histories (u_hist[0] = u_{t−1}, y_hist[0] = y_{t−1}).
pub fn predict(
    params: &OsfParams,
    cfg: &PredictorConfig,
    bank: &FilterBank,
    u_hist: &[f64],
    y_hist: &[f64],
) -> Result<Vec<f64>> {
    check_dims(params, cfg, u_hist, y_hist)?;
    let fm = FeatureMap::new(cfg, bank)?;
    let mut x = vec![0.0; fm.layout.width()];
    fm.features(bank, u_hist, y_hist, &mut x);
    let mut off = vec![0.0; cfg.d_out];
    fm.offset(y_hist, &mut off);
    let mut y = fm.raw_prediction(params, &x, &off);
    fm.clip(&mut y);
    Ok(y)
}

/// Gradient of ℓ(ŷ, y) with respect to W, taken through the unclipped predictor.
///
/// Columns the mode does not train are zero. The l2 subgradient at ŷ = y is zero.
pub fn gradient(
    params: &OsfParams,
    cfg: &PredictorConfig,
    bank: &FilterBank,
    u_hist: &[f64],
    y_hist: &[f64],
    y_t: &[f64],
    kind: LossKind,
) -> Result<OsfParams> {
    check_dims(params, cfg, u_hist, y_hist)?;
    if y_t.len() != cfg.d_out {
        return invalid("target has the wrong dimension");
    }
    let fm = FeatureMap::new(cfg, bank)?;
    let mut x = vec![0.0; fm.layout.width()];
    fm.features(bank, u_hist, y_hist, &mut x);
    let mut off = vec![0.0; cfg.d_out];
    fm.offset(y_hist, &mut off);
    let y_hat = fm.raw_prediction(params, &x, &off);
    let mut g = OsfParams::zeros(fm.layout);
    outer_gradient(&y_hat, y_t, &x, kind, fm.mask(), g.flat_mut());
    Ok(g)
}

/// Writes d ℓ / d W = e xᵀ (masked) into `out`, with e = 2(ŷ−y) or (ŷ−y)/‖ŷ−y‖.
pub fn outer_gradient(y_hat: &[f64], y: &[f64], x: &[f64], kind: LossKind, mask: &[bool], out: &mut [f64]) {
    let mut e: Vec<f64> = y_hat.iter().zip(y).map(|(a, b)| a - b).collect();
    match kind {
        LossKind::Squared => e.iter_mut().for_each(|v| *v *= 2.0),
        LossKind::L2 => {
            let n = norm(&e);
            if n == 0.0 {
                e.iter_mut().for_each(|v| *v = 0.0);
            } else {
                e.iter_mut().for_each(|v| *v /= n);
            }
        }
    }
    let f = x.len();
    for (r, er) in e.iter().enumerate() {
        let row = &mut out[r * f..(r + 1) * f];
        for ((o, xc), keep) in row.iter_mut().zip(x).zip(mask) {
            *o = if *keep { er * xc } else { 0.0 };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::filter_bank;

    fn cfg(mode: Mode, m: usize, h: usize, d_in: usize, d_out: usize) -> PredictorConfig {
        PredictorConfig { t: 16, m, h, d_in, d_out, r: 1e6, d: 1e6, mode }
    }

    #[test]
    fn chebyshev_examples() {
        assert_eq!(chebyshev_coeffs(1), vec![0.0]);
        assert_eq!(chebyshev_coeffs(2), vec![0.0, -0.5]);
        assert_eq!(chebyshev_coeffs(3), vec![0.0, -0.75, 0.0]);
        let c4 = chebyshev_coeffs(4);
        // 2^{-3} T_4 = x^4 - x^2 + 1/8
        assert!((c4[1] + 1.0).abs() < 1e-15 && (c4[3] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn chebyshev_degree_is_ceil_log2() {
        let mut c = cfg(Mode::Chebyshev, 1, 2, 0, 1);
        for (t, want) in [(16, 4), (17, 5), (1024, 10), (1000, 10), (3, 2)] {
            c.t = t;
            assert_eq!(c.chebyshev_degree(), want, "T={t}");
        }
    }

    #[test]
    fn zero_params_predict_zero() {
        let c = cfg(Mode::Full, 2, 3, 1, 2);
        let bank = filter_bank(16, 3).unwrap();
        let p = OsfParams::zeros(c.layout());
        let y = predict(&p, &c, &bank, &[1.0, 2.0, 3.0], &[1.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn copy_last_predictor() {
        let mut c = cfg(Mode::Full, 1, 2, 1, 2);
        let bank = filter_bank(16, 2).unwrap();
        let mut p = OsfParams::zeros(c.layout());
        p.set_p(0, &Mat::identity(2));
        let y = predict(&p, &c, &bank, &[0.5], &[3.0, 4.0, 9.0, 9.0]).unwrap();
        assert_eq!(y, vec![3.0, 4.0]);
        c.r = 1.0;
        let y = predict(&p, &c, &bank, &[0.5], &[3.0, 4.0]).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn losses() {
        assert_eq!(loss(&[1.0], &[1.0], LossKind::L2), 0.0);
        assert_eq!(loss(&[3.0, 4.0], &[0.0, 0.0], LossKind::L2), 5.0);
        assert_eq!(loss(&[3.0, 4.0], &[0.0, 0.0], LossKind::Squared), 25.0);
    }

    #[test]
    fn l2_gradient_vanishes_at_exact_fit() {
        let c = cfg(Mode::Full, 1, 2, 1, 1);
        let bank = filter_bank(16, 2).unwrap();
        let mut p = OsfParams::zeros(c.layout());
        p.set_p(0, &Mat::identity(1));
        let g = gradient(&p, &c, &bank, &[1.0], &[2.0], &[2.0], LossKind::L2).unwrap();
        assert!(g.flat().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_n_gradient_hand_expansion() {
        let c = cfg(Mode::ObservationsOnly, 1, 1, 0, 1);
        let bank = filter_bank(16, 1).unwrap();
        let mut p = OsfParams::zeros(c.layout());
        p.set_n(0, &Mat::from_rows(&[&[0.3]]));
        let yh: Vec<f64> = (0..15).map(|k| (k as f64 * 0.7).sin()).collect();
        let y_t = [0.25];
        let feat = bank.sigma_quarter()[0] * dot(bank.phi(0), &yh);
        let y_hat = 0.3 * feat;
        let g = gradient(&p, &c, &bank, &[], &yh, &y_t, LossKind::Squared).unwrap();
        let want = 2.0 * (y_hat - 0.25) * feat;
        assert!((g.n(0)[(0, 0)] - want).abs() < 1e-14);
        assert_eq!(g.p(0)[(0, 0)], 2.0 * (y_hat - 0.25) * yh[0]);
    }

    #[test]
    fn masks_zero_unused_blocks() {
        let c = cfg(Mode::ObservationsOnly, 2, 2, 1, 1);
        let bank = filter_bank(16, 2).unwrap();
        let p = OsfParams::zeros(c.layout());
        let g = gradient(&p, &c, &bank, &[1.0, 2.0, 3.0], &[1.0, 2.0], &[5.0], LossKind::Squared).unwrap();
        assert_eq!(g.j(0)[(0, 0)], 0.0);
        assert!(g.m(0)[(0, 0)] == 0.0 && g.m(1)[(0, 0)] == 0.0);
        assert!(g.p(0)[(0, 0)] != 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let c = cfg(Mode::Full, 3, 2, 2, 1);
        let l = c.layout();
        let w = Mat::from_fn(1, l.width(), |_, j| j as f64 * 0.5 - 1.0);
        let p = OsfParams::from_matrix(l, w).unwrap();
        let ck = p.to_checkpoint();
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        assert_eq!(OsfParams::from_checkpoint(&back).unwrap(), p);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let c = cfg(Mode::Full, 1, 1, 2, 1);
        let bank = filter_bank(16, 1).unwrap();
        let p = OsfParams::zeros(c.layout());
        assert!(predict(&p, &c, &bank, &[1.0, 2.0, 3.0], &[1.0]).is_err());
        let other = OsfParams::zeros(Layout::new(2, 1, 2, 1));
        assert!(predict(&other, &c, &bank, &[1.0, 2.0], &[1.0]).is_err());
    }
}
