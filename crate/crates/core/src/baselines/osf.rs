use super::{LearnerSettings, StreamingPredictor};
use crate::error::{invalid, Result};
use crate::filters::{filter_bank_cached, FilterBank};
use crate::history::History;
use crate::optimizers::{Avw, GradientOptimizer, OptimizerSpec};
use crate::predictor::{outer_gradient, FeatureMap, LossKind, Mode, OsfParams, PredictorConfig};
use std::sync::Arc;

#[derive(Clone, Debug)]
enum Learner {
    Gradient(GradientOptimizer),
    Avw(Avw),
}

/// Online spectral-filtering predictor: features from input and observation
/// histories, linear weights trained one step at a time.
#[derive(Clone, Debug)]
pub struct OsfLearner {
    name: String,
    cfg: PredictorConfig,
    spec: OptimizerSpec,
    loss: LossKind,
    bank: Arc<FilterBank>,
    fm: FeatureMap,
    params: OsfParams,
    learner: Learner,
    u_hist: History,
    y_hist: History,
    x: Vec<f64>,
    offset: Vec<f64>,
    /// Unclipped and clipped forecast for the pending step.
    pending: Option<(Vec<f64>, Vec<f64>)>,
    grad: Vec<f64>,
    frozen: bool,
}

impl OsfLearner {
    pub fn new(name: &str, mode: Mode, m: usize, d_in: usize, d_out: usize, s: &LearnerSettings) -> Result<Self> {
        let cfg = PredictorConfig { t: s.filter_len, m, h: s.h, d_in, d_out, r: s.r, d: s.diameter, mode };
        Self::from_config(name, cfg, s.optimizer.clone(), s.train_loss)
    }

    pub fn from_config(name: &str, cfg: PredictorConfig, spec: OptimizerSpec, loss: LossKind) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        let bank = filter_bank_cached(cfg.t, cfg.h)?;
        let fm = FeatureMap::new(&cfg, &bank)?;
        let layout = cfg.layout();
        let learner = Self::fresh_learner(&spec, layout.width(), layout.d_out * layout.width(), layout.d_out)?;
        Ok(OsfLearner {
            name: name.to_string(),
            u_hist: History::new(cfg.d_in, cfg.u_history_len()),
            y_hist: History::new(cfg.d_out, cfg.y_history_len()),
            x: vec![0.0; layout.width()],
            offset: vec![0.0; cfg.d_out],
            grad: vec![0.0; layout.d_out * layout.width()],
            params: OsfParams::zeros(layout),
            pending: None,
            frozen: false,
            cfg,
            spec,
            loss,
            bank,
            fm,
            learner,
        })
    }

    fn fresh_learner(spec: &OptimizerSpec, width: usize, n: usize, d_out: usize) -> Result<Learner> {
        Ok(match spec {
            OptimizerSpec::Avw { lambda } => Learner::Avw(Avw::new(width, d_out, *lambda)?),
            other => Learner::Gradient(other.build(n).expect("gradient optimizer")),
        })
    }

    pub fn params(&self) -> &OsfParams {
        &self.params
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.cfg
    }

    /// Replaces the weights, e.g. from a checkpoint. Columns the mode does not
    /// train are zeroed; the optimizer state is left as is.
    pub fn load_params(&mut self, params: OsfParams) -> Result<()> {
        if params.layout() != self.cfg.layout() {
            return invalid("checkpoint layout does not match the predictor (check m, h and dims)");
        }
        self.params = params;
        let mask = self.fm.mask().to_vec();
        self.params.apply_mask(&mask);
        self.pending = None;
        Ok(())
    }
}

impl StreamingPredictor for OsfLearner {
    fn name(&self) -> &str {
        &self.name
    }

    fn d_out(&self) -> usize {
        self.cfg.d_out
    }

    fn clip_radius(&self) -> f64 {
        self.cfg.r
    }

    fn predict_next(&mut self) -> Result<Vec<f64>> {
        if let Some((_, y)) = &self.pending {
            return Ok(y.clone());
        }
        self.fm.features(&self.bank, self.u_hist.window(), self.y_hist.window(), &mut self.x);
        self.fm.offset(self.y_hist.window(), &mut self.offset);
        if let (Learner::Avw(avw), false) = (&mut self.learner, self.frozen) {
            // AVW regresses on the trainable feature columns only
            let width = self.x.len();
            let mask = self.fm.mask();
            let xm: Vec<f64> = self.x.iter().zip(&mask[..width]).map(|(v, k)| if *k { *v } else { 0.0 }).collect();
            let w = avw.prepare(&xm);
            self.params.flat_mut().copy_from_slice(w.as_slice());
            let mask = mask.to_vec();
            self.params.apply_mask(&mask);
        }
        let raw = self.fm.raw_prediction(&self.params, &self.x, &self.offset);
        let mut y = raw.clone();
        self.fm.clip(&mut y);
        self.pending = Some((raw, y.clone()));
        Ok(y)
    }

    fn observe(&mut self, u: &[f64], y: &[f64]) -> Result<()> {
        if u.len() != self.cfg.d_in || y.len() != self.cfg.d_out {
            return invalid(format!(
                "observe expects u of size {} and y of size {}, got {} and {}",
                self.cfg.d_in,
                self.cfg.d_out,
                u.len(),
                y.len()
            ));
        }
        if self.pending.is_none() {
            self.predict_next()?;
        }
        let (raw, _) = self.pending.take().expect("pending forecast");
        if !self.frozen {
            match &mut self.learner {
                Learner::Gradient(opt) => {
                    outer_gradient(&raw, y, &self.x, self.loss, self.fm.mask(), &mut self.grad);
                    opt.step(self.params.flat_mut(), &self.grad);
                    let mask = self.fm.mask().to_vec();
                    self.params.apply_mask(&mask);
                }
                Learner::Avw(avw) => {
                    let target: Vec<f64> = y.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
                    avw.observe(&target);
                }
            }
        }
        if self.cfg.d_in > 0 {
            self.u_hist.push(u);
        }
        self.y_hist.push(y);
        Ok(())
    }

    fn reset(&mut self) {
        let layout = self.cfg.layout();
        self.params = OsfParams::zeros(layout);
        self.learner = Self::fresh_learner(&self.spec, layout.width(), layout.d_out * layout.width(), layout.d_out)
            .expect("validated at construction");
        self.u_hist.clear();
        self.y_hist.clear();
        self.pending = None;
        self.frozen = false;
    }

    fn set_frozen(&mut self, frozen: bool) {
        self.frozen = frozen;
    }
}
