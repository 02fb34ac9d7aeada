//! Streaming predictors behind one interface: the spectral-filtering learner
//! in its variants, a directly learned LDS, eDMD and SFeDMD.

mod edmd;
mod lds;
mod osf;

pub use edmd::{EdmdPredictor, SfedmdPredictor};
pub use lds::DirectLds;
pub use osf::OsfLearner;

use crate::error::{invalid, Result};
use crate::optimizers::OptimizerSpec;
use crate::predictor::{clip_to_ball, LossKind, Mode};
use serde::{Deserialize, Serialize};

/// Online next-observation forecaster.
///
/// Each step is `predict_next` (forecast of the coming observation) followed by
/// `observe(u_t, y_t)`. Repeated `predict_next` calls return the same cached
/// forecast; `observe` without a preceding `predict_next` computes it first.
pub trait StreamingPredictor: Send {
    fn name(&self) -> &str;
    fn d_out(&self) -> usize;
    fn clip_radius(&self) -> f64;
    fn predict_next(&mut self) -> Result<Vec<f64>>;
    /// Reveal the observation the last forecast was for, and the input applied at the same step.
    fn observe(&mut self, u: &[f64], y: &[f64]) -> Result<()>;
    /// Forget all data and learned state.
    fn reset(&mut self);
    /// Stop learning; histories still advance.
    fn set_frozen(&mut self, frozen: bool);
    /// The learner has given up (e.g. numerical blow-up).
    fn diverged(&self) -> bool {
        false
    }
    /// Current linear dynamics estimate, for methods that have one.
    fn dynamics_matrix(&self) -> Option<crate::numerics::Mat> {
        None
    }
}

/// Hyperparameters shared by the registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerSettings {
    /// Run length; sets the eDMD warm-up and refit cadence.
    pub horizon: usize,
    /// Filter horizon (filters have `filter_len − 1` taps).
    pub filter_len: usize,
    pub h: usize,
    pub m: usize,
    pub r: f64,
    pub diameter: f64,
    pub optimizer: OptimizerSpec,
    pub train_loss: LossKind,
    pub lds_hidden: usize,
    pub lds_lr: f64,
    pub lds_bptt: usize,
    pub rbf_centers: usize,
    pub sfedmd_filters: usize,
    /// Refit period for eDMD/SFeDMD; `horizon / 10` when absent.
    pub refit_every: Option<usize>,
    pub ridge: f64,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings {
            horizon: 10_000,
            filter_len: 1024,
            h: 24,
            m: 1,
            r: 1e6,
            diameter: 1e6,
            optimizer: OptimizerSpec::cocob(),
            train_loss: LossKind::L2,
            lds_hidden: 64,
            lds_lr: 1e-3,
            lds_bptt: 32,
            rbf_centers: 20,
            sfedmd_filters: 24,
            refit_every: None,
            ridge: 1e-9,
        }
    }
}

impl LearnerSettings {
    pub fn refit_period(&self) -> usize {
        self.refit_every.unwrap_or(self.horizon / 10).max(1)
    }
}

/// Names accepted by [`build_predictor`].
pub const REGISTRY: &[&str] =
    &["sf", "sf_obs", "sf_open", "regression", "chebyshev", "lds", "edmd", "sfedmd", "last_value"];

/// Builds a registered predictor.
///
/// "sf" filters observations only (J, M ≡ 0), "sf_obs" is the full learner with
/// input and observation filters, "sf_open" filters inputs only (N ≡ 0, m = 1),
/// "regression" and "chebyshev" are the autoregressive and preconditioned
/// variants, "lds" learns an observer LDS directly, "edmd"/"sfedmd" fit a
/// thinplate-lifted model by least squares, "last_value" repeats y_t.
pub fn build_predictor(
    name: &str,
    d_in: usize,
    d_out: usize,
    settings: &LearnerSettings,
    seed: u64,
) -> Result<Box<dyn StreamingPredictor>> {
    let osf = |mode: Mode, m: usize| -> Result<Box<dyn StreamingPredictor>> {
        Ok(Box::new(OsfLearner::new(name, mode, m, d_in, d_out, settings)?))
    };
    match name {
        "sf" => osf(Mode::ObservationsOnly, settings.m),
        "sf_obs" => osf(Mode::Full, settings.m),
        "sf_open" => osf(Mode::OpenLoop, 1),
        "regression" => osf(Mode::RegressionOnly, settings.m.max(1)),
        "chebyshev" => osf(Mode::Chebyshev, settings.m),
        "lds" => Ok(Box::new(DirectLds::new(d_out, settings, seed)?)),
        "edmd" => Ok(Box::new(EdmdPredictor::new(d_out, settings, seed)?)),
        "sfedmd" => Ok(Box::new(SfedmdPredictor::new(d_out, settings, seed)?)),
        "last_value" => Ok(Box::new(LastValue::new(d_out, settings.r))),
        other => invalid(format!("unknown predictor '{other}' (known: {})", REGISTRY.join(", "))),
    }
}

/// Forecasts y_{t+1} = y_t.
#[derive(Clone, Debug)]
pub struct LastValue {
    last: Vec<f64>,
    r: f64,
}

impl LastValue {
    pub fn new(d_out: usize, r: f64) -> Self {
        LastValue { last: vec![0.0; d_out], r }
    }
}

impl StreamingPredictor for LastValue {
    fn name(&self) -> &str {
        "last_value"
    }

    fn d_out(&self) -> usize {
        self.last.len()
    }

    fn clip_radius(&self) -> f64 {
        self.r
    }

    fn predict_next(&mut self) -> Result<Vec<f64>> {
        let mut y = self.last.clone();
        clip_to_ball(&mut y, self.r);
        Ok(y)
    }

    fn observe(&mut self, _u: &[f64], y: &[f64]) -> Result<()> {
        if y.len() != self.last.len() {
            return invalid("observation has the wrong dimension");
        }
        self.last.copy_from_slice(y);
        Ok(())
    }

    fn reset(&mut self) {
        self.last.iter_mut().for_each(|v| *v = 0.0);
    }

    fn set_frozen(&mut self, _frozen: bool) {}
}

/// Result of feeding a predictor its own forecasts.
#[derive(Clone, Debug)]
pub struct Rollout {
    /// Flat `steps × d_out` forecasts.
    pub predictions: Vec<f64>,
    /// 100 consecutive forecasts sat on the clip boundary.
    pub diverged: bool,
}

/// Consecutive clipped forecasts that flag a rollout as divergent.
pub const ROLLOUT_ESCAPES: usize = 100;

/// Freezes `p`, feeds it `context` (flat L × d_out), then appends its own
/// forecasts for `steps` steps. Inputs are held at zero.
pub fn autoregressive_rollout(
    p: &mut dyn StreamingPredictor,
    context: &[f64],
    d_in: usize,
    steps: usize,
) -> Result<Rollout> {
    let d = p.d_out();
    if d == 0 || !context.len().is_multiple_of(d) {
        return invalid("context length is not a multiple of d_out");
    }
    p.set_frozen(true);
    let u = vec![0.0; d_in];
    for y in context.chunks(d) {
        p.predict_next()?;
        p.observe(&u, y)?;
    }
    let r = p.clip_radius();
    let mut out = Vec::with_capacity(steps * d);
    let (mut run, mut diverged) = (0, false);
    for _ in 0..steps {
        let y = p.predict_next()?;
        if crate::numerics::norm(&y) >= r * (1.0 - 1e-9) {
            run += 1;
            diverged |= run >= ROLLOUT_ESCAPES;
        } else {
            run = 0;
        }
        p.observe(&u, &y)?;
        out.extend_from_slice(&y);
    }
    Ok(Rollout { predictions: out, diverged })
}
