use super::{LearnerSettings, StreamingPredictor};
use crate::error::{invalid, Result};
use crate::filters::{filter_bank_cached, FilterBank};
use crate::history::History;
use crate::lifting::{edmd_fit, fit_rbf_dictionary, EdmdFit, RbfDictionary};
use crate::numerics::{ridge_solve, Mat};
use crate::predictor::clip_to_ball;
use std::sync::Arc;

/// Dictionary for a warm-up sample: identity plus `k` thinplate centers, or
/// identity alone when `k` is zero or the sample has too few distinct points.
fn warmup_dictionary(data: &[f64], d: usize, k: usize, seed: u64) -> RbfDictionary {
    if k == 0 {
        return RbfDictionary::identity(d);
    }
    fit_rbf_dictionary(data, d, k, seed).unwrap_or_else(|_| RbfDictionary::identity(d))
}

/// Streaming eDMD: predicts zero until `horizon / 10` observations, then fits
/// a thinplate dictionary once and refits (A, C) on all data every refit period.
#[derive(Clone, Debug)]
pub struct EdmdPredictor {
    dy: usize,
    r: f64,
    k: usize,
    seed: u64,
    warmup: usize,
    period: usize,
    raw: Vec<f64>,
    dict: Option<RbfDictionary>,
    lifted: Vec<f64>,
    fit: Option<EdmdFit>,
    pending: Option<Vec<f64>>,
    frozen: bool,
}

impl EdmdPredictor {
    pub fn new(d_out: usize, s: &LearnerSettings, seed: u64) -> Result<Self> {
        if d_out == 0 {
            return invalid("eDMD needs a positive observation dimension");
        }
        Ok(EdmdPredictor {
            dy: d_out,
            r: s.r,
            k: s.rbf_centers,
            seed,
            warmup: (s.horizon / 10).max(1),
            period: s.refit_period(),
            raw: Vec::new(),
            dict: None,
            lifted: Vec::new(),
            fit: None,
            pending: None,
            frozen: false,
        })
    }

    pub fn dictionary(&self) -> Option<&RbfDictionary> {
        self.dict.as_ref()
    }

    fn count(&self) -> usize {
        self.raw.len() / self.dy
    }

    fn refit(&mut self) {
        let dict = self.dict.get_or_insert_with(|| warmup_dictionary(&self.raw, self.dy, self.k, self.seed));
        let n = dict.size();
        let have = self.lifted.len() / n;
        for t in have..self.raw.len() / self.dy {
            self.lifted.extend(dict.lift(&self.raw[t * self.dy..(t + 1) * self.dy]));
        }
        let t = self.lifted.len() / n;
        let z = Mat::from_vec(t, n, self.lifted.clone());
        let y = Mat::from_vec(t, self.dy, self.raw.clone());
        if let (Ok(z), Ok(y)) = (z, y) {
            // too few snapshots or a failed solve keeps the previous model
            if let Ok(f) = edmd_fit(&z, &y) {
                self.fit = Some(f);
            }
        }
    }
}

impl StreamingPredictor for EdmdPredictor {
    fn name(&self) -> &str {
        "edmd"
    }

    fn d_out(&self) -> usize {
        self.dy
    }

    fn clip_radius(&self) -> f64 {
        self.r
    }

    fn predict_next(&mut self) -> Result<Vec<f64>> {
        if let Some(p) = &self.pending {
            return Ok(p.clone());
        }
        let mut y = match (&self.fit, &self.dict) {
            (Some(f), Some(d)) if self.count() > 0 => {
                let t = self.count() - 1;
                f.predict(&d.lift(&self.raw[t * self.dy..(t + 1) * self.dy]))
            }
            _ => vec![0.0; self.dy],
        };
        if y.iter().any(|v| !v.is_finite()) {
            y = vec![0.0; self.dy];
        }
        clip_to_ball(&mut y, self.r);
        self.pending = Some(y.clone());
        Ok(y)
    }

    fn observe(&mut self, _u: &[f64], y: &[f64]) -> Result<()> {
        if y.len() != self.dy {
            return invalid("observation has the wrong dimension");
        }
        self.pending = None;
        if self.frozen {
            // keep only the newest observation, which the forecast reads
            let t = self.count();
            if t > 0 {
                self.raw[(t - 1) * self.dy..t * self.dy].copy_from_slice(y);
                if let Some(d) = &self.dict {
                    let n = d.size();
                    if self.lifted.len() == t * n {
                        let z = d.lift(y);
                        self.lifted[(t - 1) * n..t * n].copy_from_slice(&z);
                    }
                }
            } else {
                self.raw.extend_from_slice(y);
            }
            return Ok(());
        }
        self.raw.extend_from_slice(y);
        let t = self.count();
        if t >= self.warmup && (t - self.warmup).is_multiple_of(self.period) {
            self.refit();
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.raw.clear();
        self.lifted.clear();
        self.dict = None;
        self.fit = None;
        self.pending = None;
        self.frozen = false;
    }

    fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }

    fn dynamics_matrix(&self) -> Option<Mat> {
        self.fit.as_ref().map(|f| f.a.clone())
    }
}

/// Streaming SFeDMD: spectral filters over the lifted history, regressed onto
/// the next observation with a running Gram matrix and a ridge solve every
/// refit period. Predicts zero until the first solve, which waits until there
/// are at least as many samples as features.
#[derive(Clone, Debug)]
pub struct SfedmdPredictor {
    dy: usize,
    r: f64,
    k: usize,
    seed: u64,
    ridge: f64,
    warmup: usize,
    period: usize,
    bank: Arc<FilterBank>,
    raw: Vec<f64>,
    dict: Option<RbfDictionary>,
    hist: Option<History>,
    /// Features of the newest lifted history (filter-major, width count·n).
    feat: Vec<f64>,
    gram: Vec<f64>,
    rhs: Vec<f64>,
    samples: usize,
    /// width × d_y
    w: Option<Mat>,
    pending: Option<Vec<f64>>,
    frozen: bool,
}

impl SfedmdPredictor {
    pub fn new(d_out: usize, s: &LearnerSettings, seed: u64) -> Result<Self> {
        if d_out == 0 {
            return invalid("SFeDMD needs a positive observation dimension");
        }
        let bank = filter_bank_cached(s.filter_len, s.sfedmd_filters)?;
        Ok(SfedmdPredictor {
            dy: d_out,
            r: s.r,
            k: s.rbf_centers,
            seed,
            ridge: s.ridge,
            warmup: (s.horizon / 10).max(1),
            period: s.refit_period(),
            bank,
            raw: Vec::new(),
            dict: None,
            hist: None,
            feat: Vec::new(),
            gram: Vec::new(),
            rhs: Vec::new(),
            samples: 0,
            w: None,
            pending: None,
            frozen: false,
        })
    }

    fn width(&self) -> usize {
        self.feat.len()
    }

    /// Adds (current features → y) to the normal equations (upper triangle).
    fn accumulate(&mut self, y: &[f64]) {
        let n = self.width();
        let f = &self.feat;
        for i in 0..n {
            let fi = f[i];
            if fi == 0.0 {
                continue;
            }
            let row = &mut self.gram[i * n + i..(i + 1) * n];
            for (g, fj) in row.iter_mut().zip(&f[i..]) {
                *g += fi * fj;
            }
            for (b, yj) in self.rhs[i * self.dy..(i + 1) * self.dy].iter_mut().zip(y) {
                *b += fi * yj;
            }
        }
        self.samples += 1;
    }

    /// Pushes y_t into the lifted history and recomputes the features.
    fn advance(&mut self, y: &[f64]) {
        let (dict, hist) = (self.dict.as_ref().unwrap(), self.hist.as_mut().unwrap());
        hist.push(&dict.lift(y));
        let n = dict.size();
        self.bank.features_into(hist.window(), n, &mut self.feat);
    }

    fn start(&mut self) {
        let dict = warmup_dictionary(&self.raw, self.dy, self.k, self.seed);
        let n = dict.size();
        let width = self.bank.count() * n;
        self.hist = Some(History::new(n, self.bank.len()));
        self.dict = Some(dict);
        self.feat = vec![0.0; width];
        self.gram = vec![0.0; width * width];
        self.rhs = vec![0.0; width * self.dy];
        self.samples = 0;
        let raw = std::mem::take(&mut self.raw);
        for (t, y) in raw.chunks_exact(self.dy).enumerate() {
            if t > 0 {
                self.accumulate(y);
            }
            self.advance(y);
        }
        self.raw = raw;
    }

    fn solve(&mut self) {
        let n = self.width();
        // an underdetermined first fit extrapolates wildly; wait for enough samples
        if self.samples < n {
            return;
        }
        let g = Mat::from_fn(n, n, |i, j| if i <= j { self.gram[i * n + j] } else { self.gram[j * n + i] });
        let b = Mat::from_fn(n, self.dy, |i, j| self.rhs[i * self.dy + j]);
        if let Ok(w) = ridge_solve(&g, &b, self.ridge) {
            if w.as_slice().iter().all(|v| v.is_finite()) {
                self.w = Some(w);
            }
        }
    }
}

impl StreamingPredictor for SfedmdPredictor {
    fn name(&self) -> &str {
        "sfedmd"
    }

    fn d_out(&self) -> usize {
        self.dy
    }

    fn clip_radius(&self) -> f64 {
        self.r
    }

    fn predict_next(&mut self) -> Result<Vec<f64>> {
        if let Some(p) = &self.pending {
            return Ok(p.clone());
        }
        let mut y = vec![0.0; self.dy];
        if let Some(w) = &self.w {
            for (i, f) in self.feat.iter().enumerate() {
                if *f != 0.0 {
                    for (o, wij) in y.iter_mut().zip(w.row(i)) {
                        *o += f * wij;
                    }
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            y = vec![0.0; self.dy];
        }
        clip_to_ball(&mut y, self.r);
        self.pending = Some(y.clone());
        Ok(y)
    }

    fn observe(&mut self, _u: &[f64], y: &[f64]) -> Result<()> {
        if y.len() != self.dy {
            return invalid("observation has the wrong dimension");
        }
        self.pending = None;
        if self.dict.is_none() {
            if self.frozen {
                self.raw.clear();
                self.raw.extend_from_slice(y);
                return Ok(());
            }
            self.raw.extend_from_slice(y);
            if self.raw.len() / self.dy >= self.warmup {
                self.start();
                self.solve();
            }
            return Ok(());
        }
        if !self.frozen {
            self.accumulate(y);
        }
        self.advance(y);
        let t = self.samples + 1;
        let first_determined = self.w.is_none() && self.samples == self.width();
        if !self.frozen && t >= self.warmup && ((t - self.warmup).is_multiple_of(self.period) || first_determined) {
            self.solve();
        }
        Ok(())
    }

    fn reset(&mut self) {
        self.raw.clear();
        self.dict = None;
        self.hist = None;
        self.feat.clear();
        self.gram.clear();
        self.rhs.clear();
        self.samples = 0;
        self.w = None;
        self.pending = None;
        self.frozen = false;
    }

    fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(horizon: usize) -> LearnerSettings {
        LearnerSettings {
            horizon,
            filter_len: 64,
            sfedmd_filters: 8,
            rbf_centers: 0,
            r: 1e3,
            ..LearnerSettings::default()
        }
    }

    fn rotation(t_len: usize) -> Vec<[f64; 2]> {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let mut x = [1.0, 0.0];
        (0..t_len)
            .map(|_| {
                let out = x;
                x = [c * x[0] - s * x[1], s * x[0] + c * x[1]];
                out
            })
            .collect()
    }

    #[test]
    fn edmd_is_cold_then_exact_on_linear_data() {
        let mut p = EdmdPredictor::new(2, &settings(200), 0).unwrap();
        let data = rotation(200);
        let mut errs = Vec::new();
        for (t, y) in data.iter().enumerate() {
            let hat = p.predict_next().unwrap();
            if t < 20 {
                assert_eq!(hat, vec![0.0, 0.0], "step {t}");
            }
            errs.push((hat[0] - y[0]).powi(2) + (hat[1] - y[1]).powi(2));
            p.observe(&[], y).unwrap();
        }
        assert!(errs[20..].iter().all(|e| *e < 1e-16), "{:?}", &errs[20..25]);
        let a = p.dynamics_matrix().unwrap();
        assert!((a[(0, 0)] - 0.3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn edmd_with_thinplate_centers_stays_accurate() {
        let s = LearnerSettings { rbf_centers: 4, ..settings(400) };
        let mut p = EdmdPredictor::new(2, &s, 3).unwrap();
        let data = rotation(400);
        let mut late = 0.0;
        for (t, y) in data.iter().enumerate() {
            let hat = p.predict_next().unwrap();
            if t >= 300 {
                late += (hat[0] - y[0]).powi(2) + (hat[1] - y[1]).powi(2);
            }
            p.observe(&[], y).unwrap();
        }
        assert_eq!(p.dictionary().unwrap().size(), 6);
        assert!(late / 100.0 < 1e-8, "{late}");
    }

    #[test]
    fn sfedmd_learns_rotation() {
        let mut p = SfedmdPredictor::new(2, &settings(1000), 0).unwrap();
        let data = rotation(1000);
        let mut late = 0.0;
        for (t, y) in data.iter().enumerate() {
            let hat = p.predict_next().unwrap();
            if t < 100 {
                assert_eq!(hat, vec![0.0, 0.0]);
            }
            if t >= 900 {
                late += (hat[0] - y[0]).powi(2) + (hat[1] - y[1]).powi(2);
            }
            p.observe(&[], y).unwrap();
        }
        assert!(late / 100.0 < 1e-4, "{late}");
    }

    #[test]
    fn sfedmd_gram_matches_batch_features() {
        let mut p = SfedmdPredictor::new(1, &settings(30), 0).unwrap();
        let ys: Vec<f64> = (0..30).map(|t| (0.7 * t as f64).sin()).collect();
        for y in &ys {
            p.observe(&[], &[*y]).unwrap();
        }
        // samples pair features at t with y_{t+1}
        let bank = p.bank.clone();
        let n = p.width();
        let mut g00 = 0.0;
        let mut b0 = 0.0;
        for t in 0..29 {
            let f = crate::lifting::sfedmd_features(&bank, &ys, 1, t);
            g00 += f[0] * f[0];
            b0 += f[0] * ys[t + 1];
        }
        assert_eq!(p.samples, 29);
        assert!((p.gram[0] - g00).abs() < 1e-12 * g00.abs().max(1.0));
        assert!((p.rhs[0] - b0).abs() < 1e-12 * b0.abs().max(1.0));
        assert_eq!(n, 8);
    }
}
