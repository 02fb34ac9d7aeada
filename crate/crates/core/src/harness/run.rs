use super::analysis::{decile_summary, mean_curve, smooth, spectral_gap, DecileSummary};
use super::config::{Disturbance, ExperimentConfig, Observe, SystemKind};
use crate::baselines::{build_predictor, StreamingPredictor};
use crate::error::{OsfError, Result};
use crate::numerics::eig_general;
use crate::systems::{
    adversarial_lowerbound_stream, gaussian_inputs, gen_gaussian_lds, gen_permutation_lds, simulate_lds,
    sinusoid_sequence, LangevinParams, LorenzParams, NonlinearSystem, ObservationMap, PendulumParams, PendulumState,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// A generated stream as the predictors see it.
#[derive(Clone, Debug)]
pub struct Episode {
    pub d_in: usize,
    pub d_out: usize,
    /// Flat T × d_in inputs handed to `observe`, already shifted by the input lead.
    pub inputs: Vec<f64>,
    /// Flat T × d_out observations.
    pub y: Vec<f64>,
    /// Steps the loss is scored on, when only some count.
    pub eval_steps: Option<Vec<usize>>,
    /// Forecasts of a reference predictor with side information.
    pub reference: Option<Vec<f64>>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.y.len() / self.d_out
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y_at(&self, t: usize) -> &[f64] {
        &self.y[t * self.d_out..(t + 1) * self.d_out]
    }

    pub fn u_at(&self, t: usize) -> &[f64] {
        &self.inputs[t * self.d_in..(t + 1) * self.d_in]
    }
}

fn gaussians(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Pendulum feedback rows tried before giving up on a seed.
const PENDULUM_ATTEMPTS: usize = 1000;

/// Builds the stream for one seed.
pub fn generate_episode(cfg: &ExperimentConfig, seed: u64) -> Result<Episode> {
    let t_len = cfg.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sys_seed, input_seed, obs_seed) = (rng.random::<u64>(), rng.random::<u64>(), rng.random::<u64>());
    let observation = |d_x: usize| match cfg.observe {
        Observe::Full => ObservationMap::Full,
        Observe::Partial => ObservationMap::random_functional(d_x, obs_seed),
    };
    let autonomous = |tr: crate::systems::Trajectory| Episode {
        d_in: 0,
        d_out: tr.d_out,
        inputs: Vec::new(),
        y: tr.y,
        eval_steps: None,
        reference: None,
    };
    match cfg.system {
        SystemKind::LdsGaussian | SystemKind::LdsPermutation => {
            let sys = if cfg.system == SystemKind::LdsGaussian {
                gen_gaussian_lds(cfg.dim, sys_seed)?
            } else {
                gen_permutation_lds(cfg.dim, sys_seed)?
            };
            let lead = cfg.input_lead;
            let u = gaussian_inputs(t_len + lead, 1, input_seed);
            let w = match cfg.disturbance {
                Disturbance::Sinusoid => Some(sinusoid_sequence(t_len, cfg.dim)),
                Disturbance::None => None,
            };
            let tr = simulate_lds(&sys, &u[..t_len], w.as_deref(), t_len)?;
            Ok(Episode {
                d_in: 1,
                d_out: 1,
                inputs: u[lead..lead + t_len].to_vec(),
                y: tr.y,
                eval_steps: None,
                reference: None,
            })
        }
        SystemKind::Lorenz => {
            let sys = NonlinearSystem::Lorenz { params: LorenzParams::default(), x0: gaussians(&mut rng, 3) };
            Ok(autonomous(sys.trajectory(t_len, &observation(3), Some(seed))?))
        }
        SystemKind::Pendulum => {
            // near upright; the fall drives the chaotic swing
            let g: Vec<f64> = gaussians(&mut rng, 6).iter().map(|v| 0.1 * v).collect();
            let x0 = PendulumState { x: g[0], th1: g[1], th2: g[2], xd: g[3], th1d: g[4], th2d: g[5] };
            // i.i.d. Gaussian feedback rows, redrawn until the closed loop stays bounded
            let mut last = None;
            for _ in 0..PENDULUM_ATTEMPTS {
                let k = gaussians(&mut rng, 8);
                let sys = NonlinearSystem::DoublePendulum { params: PendulumParams::default(), k, x0 };
                match sys.trajectory(t_len, &observation(8), Some(seed)) {
                    Ok(tr) => return Ok(autonomous(tr)),
                    Err(e @ OsfError::Simulation { .. }) => last = Some(e),
                    Err(e) => return Err(e),
                }
            }
            Err(last.unwrap_or_else(|| OsfError::Internal("no pendulum attempts".into())))
        }
        SystemKind::Langevin => {
            let params = LangevinParams { coupling: cfg.langevin_coupling, ..LangevinParams::default() };
            let sys = NonlinearSystem::Langevin { params, x0: gaussians(&mut rng, cfg.dim), seed: sys_seed };
            Ok(autonomous(sys.trajectory(t_len, &observation(cfg.dim), Some(seed))?))
        }
        SystemKind::LowerboundAdversary => {
            let s = adversarial_lowerbound_stream(cfg.dim, t_len, sys_seed)?;
            Ok(Episode {
                d_in: s.trajectory.d_in,
                d_out: s.trajectory.d_out,
                inputs: s.trajectory.u,
                y: s.trajectory.y,
                eval_steps: Some(s.test_steps),
                reference: Some(s.clairvoyant),
            })
        }
    }
}

/// One predictor on one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    /// Squared ℓ2 loss per step.
    pub losses: Vec<f64>,
    /// Unsquared ℓ2 loss per step.
    pub l2: Vec<f64>,
    pub diverged: bool,
    pub error: Option<String>,
    /// Eigenvalues of the final dynamics estimate, for predictors that have one.
    pub eigenvalues: Option<Vec<Complex64>>,
}

impl SeedRun {
    /// Mean ℓ2 loss over the episode's scored steps.
    pub fn eval_l2(&self, steps: &[usize]) -> f64 {
        steps.iter().map(|&t| self.l2[t]).sum::<f64>() / steps.len().max(1) as f64
    }
}

/// Streams an episode through a predictor: forecast, score, reveal.
///
/// A predictor error is not fatal: the run is flagged divergent and the
/// remaining steps are scored as zero forecasts.
pub fn stream(p: &mut dyn StreamingPredictor, ep: &Episode, seed: u64) -> SeedRun {
    let t_len = ep.len();
    let mut losses = Vec::with_capacity(t_len);
    let mut l2 = Vec::with_capacity(t_len);
    let mut error = None;
    for t in 0..t_len {
        let y = ep.y_at(t);
        let step = p.predict_next().and_then(|hat| {
            let sq: f64 = hat.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            p.observe(ep.u_at(t), y)?;
            Ok(sq)
        });
        match step {
            Ok(sq) if sq.is_finite() => {
                losses.push(sq);
                l2.push(sq.sqrt());
            }
            Ok(_) => {
                error = Some(format!("non-finite forecast at step {t}"));
                break;
            }
            Err(e) => {
                error = Some(format!("step {t}: {e}"));
                break;
            }
        }
    }
    for t in losses.len()..t_len {
        let sq: f64 = ep.y_at(t).iter().map(|v| v * v).sum();
        losses.push(sq);
        l2.push(sq.sqrt());
    }
    let eigenvalues = p.dynamics_matrix().and_then(|a| eig_general(&a).ok());
    SeedRun { seed, losses, l2, diverged: error.is_some() || p.diverged(), error, eigenvalues }
}

fn reference_run(ep: &Episode, seed: u64) -> Option<SeedRun> {
    let r = ep.reference.as_ref()?;
    let d = ep.d_out;
    let losses: Vec<f64> = (0..ep.len())
        .map(|t| ep.y_at(t).iter().zip(&r[t * d..(t + 1) * d]).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let l2 = losses.iter().map(|v: &f64| v.sqrt()).collect();
    Some(SeedRun { seed, losses, l2, diverged: false, error: None, eigenvalues: None })
}

/// Every seed's runs for one predictor, plus seed-averaged statistics.
#[derive(Clone, Debug)]
pub struct PredictorRecord {
    pub name: String,
    pub runs: Vec<SeedRun>,
    /// Seed-mean squared loss per step.
    pub mean: Vec<f64>,
    /// Trailing moving average of `mean`.
    pub smoothed: Vec<f64>,
    pub deciles: DecileSummary,
    pub l2_deciles: DecileSummary,
    /// Mean ℓ2 over scored steps and seeds, when the episode scores a subset.
    pub eval_l2: Option<f64>,
    pub spectral_gaps: Vec<Option<f64>>,
}

impl PredictorRecord {
    fn new(name: String, runs: Vec<SeedRun>, window: usize, eval: Option<&[Vec<usize>]>) -> Result<Self> {
        let mean = mean_curve(&runs.iter().map(|r| r.losses.as_slice()).collect::<Vec<_>>())?;
        let mean_l2 = mean_curve(&runs.iter().map(|r| r.l2.as_slice()).collect::<Vec<_>>())?;
        let smoothed = smooth(&mean, window)?;
        let deciles = decile_summary(&smoothed)?;
        let l2_deciles = decile_summary(&smooth(&mean_l2, window)?)?;
        let eval_l2 =
            eval.map(|steps| runs.iter().zip(steps).map(|(r, s)| r.eval_l2(s)).sum::<f64>() / runs.len() as f64);
        let spectral_gaps = runs.iter().map(|r| r.eigenvalues.as_ref().and_then(|e| spectral_gap(e).ok())).collect();
        Ok(PredictorRecord { name, runs, mean, smoothed, deciles, l2_deciles, eval_l2, spectral_gaps })
    }

    pub fn diverged_seeds(&self) -> Vec<u64> {
        self.runs.iter().filter(|r| r.diverged).map(|r| r.seed).collect()
    }

    /// Final-decile mean of the smoothed seed-mean squared loss.
    pub fn final_loss(&self) -> f64 {
        self.deciles.last
    }
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    pub predictors: Vec<PredictorRecord>,
}

impl RunRecord {
    pub fn predictor(&self, name: &str) -> Option<&PredictorRecord> {
        self.predictors.iter().find(|p| p.name == name)
    }
}

/// Per-seed seeds: `cfg.seed + i`.
pub fn seed_list(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.seeds as u64).map(|i| cfg.seed.wrapping_add(i)).collect()
}

type SeedOutput = (Vec<SeedRun>, Option<SeedRun>, Option<Vec<usize>>);

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let ep = generate_episode(cfg, seed)?;
    let settings = cfg.learner_settings()?;
    let mut runs = Vec::with_capacity(cfg.predictors.len());
    for (k, name) in cfg.predictors.iter().enumerate() {
        let mut p = build_predictor(name, ep.d_in, ep.d_out, &settings, seed.wrapping_mul(31).wrapping_add(k as u64))?;
        runs.push(stream(p.as_mut(), &ep, seed));
    }
    Ok((runs, reference_run(&ep, seed), ep.eval_steps.clone()))
}

/// Runs every predictor on every seed, `threads` seeds at a time.
///
/// Results are assembled in seed order, so the record does not depend on
/// scheduling. A failed simulation aborts the run; predictor failures are
/// recorded per seed.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let seeds = seed_list(cfg);
    let slots: Mutex<Vec<Option<Result<SeedOutput>>>> = Mutex::new(vec![None; seeds.len()]);
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, seeds.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = run_seed(cfg, seeds[i]);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    let mut per_pred: Vec<Vec<SeedRun>> = vec![Vec::new(); cfg.predictors.len()];
    let mut reference = Vec::new();
    let mut evals = Vec::new();
    for out in slots.into_inner().unwrap() {
        let (runs, r, e) = out.expect("every seed ran")?;
        for (k, run) in runs.into_iter().enumerate() {
            per_pred[k].push(run);
        }
        reference.extend(r);
        evals.extend(e);
    }
    let eval = (evals.len() == seeds.len()).then_some(evals.as_slice());
    let mut predictors = Vec::new();
    for (name, runs) in cfg.predictors.iter().zip(per_pred) {
        predictors.push(PredictorRecord::new(name.clone(), runs, cfg.smoothing, eval)?);
    }
    if reference.len() == seeds.len() {
        predictors.push(PredictorRecord::new("clairvoyant".into(), reference, cfg.smoothing, eval)?);
    }
    Ok(RunRecord {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seeds,
        wall_time_s: start.elapsed().as_secs_f64(),
        predictors,
    })
}
