//! `osf-lab`: experiments, filter banks, observer search, lifts and rollouts
//! from the command line.

pub mod svg;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use osf_core::baselines::{autoregressive_rollout, build_predictor, OsfLearner, StreamingPredictor};
use osf_core::filters::filter_bank;
use osf_core::harness::{generate_episode, load_config, run_experiment, write_run, ExperimentConfig, RunRecord};
use osf_core::lifting::{build_eps_net, lift_rollout, markov_lift, markov_lift_stochastic, DiscreteLift};
use osf_core::numerics::eig_general;
use osf_core::observer::{qstar_search, SpectralConstraint};
use osf_core::predictor::{Checkpoint, Mode, OsfParams};
use osf_core::systems::{Trajectory, TrajectoryMeta};
use osf_core::{Mat, OsfError};
use rand_distr::{Distribution, Normal};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use svg::Series;

#[derive(Parser, Debug)]
#[command(name = "osf-lab", version, about = "Online spectral-filtering experiments and diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Config override `key=value`; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for seed-level parallelism.
    #[arg(long, global = true, env = "OSF_LAB_THREADS")]
    pub threads: Option<usize>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run an experiment and write losses.csv, summary.json, loss_curves.svg and config.toml.
    Run {
        /// Start from a named recipe (same as `--set recipe=NAME`).
        #[arg(long)]
        recipe: Option<String>,
    },
    /// Print the filter bank's singular values and decay margins as CSV.
    Filters {
        /// Filter length T.
        t: usize,
        /// Number of filters h.
        h: usize,
    },
    /// Search observer gains with small eigenvector condition number.
    Qstar {
        /// State matrix A (matrix text format).
        #[arg(long)]
        a: PathBuf,
        /// Observation row C (matrix text format, 1 × n).
        #[arg(long)]
        c: PathBuf,
        /// Real targets lie in [0, 1 − rho].
        #[arg(long)]
        rho: f64,
        /// Complex targets lie in the disk of radius 1 − gamma.
        #[arg(long)]
        gamma: f64,
        /// Random target spectra to try.
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Eigenvalues of a square matrix, with a unit-circle scatter plot.
    Eigs {
        /// Matrix file (matrix text format).
        matrix: PathBuf,
    },
    /// Build an ε-net Markov lift of a 1-Lipschitz map.
    Lift {
        /// rotation (2-D) or contraction (any d ≤ 4).
        #[arg(long, default_value = "rotation")]
        system: String,
        /// Radius of the state ball covered by the net.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Net resolution ε.
        #[arg(long)]
        eps: f64,
        /// Rotation angle or contraction factor.
        #[arg(long)]
        param: Option<f64>,
        /// State dimension for the contraction.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Gaussian noise scale; positive values build the stochastic lift.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Compare a rollout of this many steps against the true map.
        #[arg(long, default_value_t = 0)]
        steps: usize,
        /// Initial state for the comparison, comma separated.
        #[arg(long, value_delimiter = ',')]
        x0: Vec<f64>,
    },
    /// Feed a predictor its own forecasts after a context.
    Rollout {
        /// Parameter checkpoint (JSON) for a spectral-filtering predictor.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Context observations, L × d (matrix text format).
        #[arg(long)]
        context: PathBuf,
        /// Forecast steps after the context.
        #[arg(long)]
        steps: usize,
        /// Registered predictor trained online on the context when no checkpoint is given.
        #[arg(long, default_value = "sf")]
        predictor: String,
        /// Predictor mode used with --checkpoint.
        #[arg(long, default_value = "observations_only")]
        mode: String,
        /// Write the trained weights here (spectral-filtering predictors only).
        #[arg(long)]
        save_checkpoint: Option<PathBuf>,
    },
    /// Generate one seed's stream and write it as trajectory.csv plus a JSON sidecar.
    Simulate,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files: exit 2.
    Usage(String),
    /// Everything else: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<OsfError> for CliError {
    fn from(e: OsfError) -> Self {
        match e {
            OsfError::Config(_) | OsfError::InvalidInput(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<svg::SvgError> for CliError {
    fn from(e: svg::SvgError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn read_matrix(path: &Path) -> CliResult<Mat> {
    Mat::parse_text(&read_input(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn json_f64(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn complex_json(z: &[Complex64]) -> Value {
    Value::Array(z.iter().map(|z| json!([json_f64(z.re), json_f64(z.im)])).collect())
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialise") + "\n"
}

impl Common {
    fn experiment_config(&self, extra: &[String]) -> CliResult<ExperimentConfig> {
        let text = self.config.as_deref().map(read_input).transpose()?;
        let mut sets = extra.to_vec();
        sets.extend(self.set.iter().cloned());
        if let Some(seed) = self.seed {
            sets.push(format!("seed={seed}"));
        }
        Ok(load_config(text.as_deref(), &sets)?)
    }

    fn threads(&self) -> usize {
        self.threads
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }

    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn log(&self, msg: impl FnOnce() -> String) {
        if self.verbose > 0 {
            eprintln!("{}", msg());
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("osf-lab: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns what it prints on stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    let c = &cli.common;
    match &cli.command {
        Command::Run { recipe } => cmd_run(c, recipe.as_deref()),
        Command::Filters { t, h } => cmd_filters(c, *t, *h),
        Command::Qstar { a, c: cpath, rho, gamma, trials } => cmd_qstar(c, a, cpath, *rho, *gamma, *trials),
        Command::Eigs { matrix } => cmd_eigs(c, matrix),
        Command::Lift { system, radius, eps, param, dim, noise, steps, x0 } => cmd_lift(
            c,
            &LiftArgs {
                system,
                radius: *radius,
                eps: *eps,
                param: *param,
                dim: *dim,
                noise: *noise,
                steps: *steps,
                x0,
            },
        ),
        Command::Rollout { checkpoint, context, steps, predictor, mode, save_checkpoint } => cmd_rollout(
            c,
            &RolloutArgs {
                checkpoint: checkpoint.as_deref(),
                context,
                steps: *steps,
                predictor,
                mode,
                save_checkpoint: save_checkpoint.as_deref(),
            },
        ),
        Command::Simulate => cmd_simulate(c),
    }
}

/// Loss-curve plot of each predictor's smoothed seed-mean loss.
pub fn loss_plot(record: &RunRecord) -> CliResult<String> {
    let series: Vec<Series> = record.predictors.iter().map(|p| Series::from_values(&p.name, &p.smoothed)).collect();
    let title = format!(
        "{} (smoothed over {} steps, {} seeds)",
        record.config.name,
        record.config.smoothing,
        record.seeds.len()
    );
    Ok(svg::loss_curves(&series, &title)?)
}

fn cmd_run(c: &Common, recipe: Option<&str>) -> CliResult<String> {
    let extra: Vec<String> = recipe.map(|r| format!("recipe=\"{r}\"")).into_iter().collect();
    let cfg = c.experiment_config(&extra)?;
    let out = c.out_or("out");
    c.log(|| {
        format!("running {} ({} seeds × {} steps, predictors {:?})", cfg.name, cfg.seeds, cfg.horizon, cfg.predictors)
    });
    let record = run_experiment(&cfg, c.threads())?;
    write_run(&record, &out)?;
    write_file(&out.join("loss_curves.svg"), &loss_plot(&record)?)?;
    let mut s = String::new();
    for p in &record.predictors {
        let _ = writeln!(
            s,
            "{:<12} first decile {:.4e}  last decile {:.4e}  ratio {:.4e}  diverged seeds {}",
            p.name,
            p.deciles.first,
            p.deciles.last,
            p.deciles.ratio,
            p.diverged_seeds().len()
        );
    }
    let _ = writeln!(s, "wrote {} ({:.1}s)", out.display(), record.wall_time_s);
    Ok(s)
}

fn cmd_filters(c: &Common, t: usize, h: usize) -> CliResult<String> {
    let bank = filter_bank(t, h)?;
    let mut csv = String::from("index,sigma,sigma_quarter,bound,margin\n");
    for (i, (s, q)) in bank.sigma().iter().zip(bank.sigma_quarter()).enumerate() {
        let bound = bank.decay_bound(i + 1);
        let _ = writeln!(csv, "{},{s:e},{q:e},{bound:e},{:e}", i + 1, bound - q);
    }
    if let Some(out) = &c.out {
        write_file(&out.join("filters.csv"), &csv)?;
    }
    Ok(csv)
}

fn cmd_qstar(c: &Common, a: &Path, cpath: &Path, rho: f64, gamma: f64, trials: usize) -> CliResult<String> {
    let (a, cm) = (read_matrix(a)?, read_matrix(cpath)?);
    let sigma = SpectralConstraint::from_rho_gamma(rho, gamma)?;
    let search = qstar_search(&a, &cm, &sigma, trials, c.seed.unwrap_or(0), &[])?;
    let finite = search.trials.iter().filter(|t| t.kappa.is_finite()).count();
    let v = json!({
        "best_kappa": json_f64(search.best.kappa),
        "gain_norm": json_f64(search.best.gain_norm),
        "gain": search.best.l.as_slice(),
        "poles": complex_json(&search.best.eigenvalues),
        "trials": search.trials.len(),
        "finite_trials": finite,
        "trial_kappas": search.trials.iter().map(|t| json_f64(t.kappa)).collect::<Vec<_>>(),
    });
    let text = pretty(&v);
    if let Some(out) = &c.out {
        write_file(&out.join("qstar.json"), &text)?;
    }
    Ok(text)
}

fn cmd_eigs(c: &Common, path: &Path) -> CliResult<String> {
    let m = read_matrix(path)?;
    let eig = eig_general(&m)?;
    let out = c.out_or(".");
    let title = format!("eigenvalues of {}", path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default());
    write_file(&out.join("eigenvalues.svg"), &svg::eigen_scatter(&eig, &title)?)?;
    let mut csv = String::from("re,im,abs\n");
    for z in &eig {
        let _ = writeln!(csv, "{:e},{:e},{:e}", z.re, z.im, z.norm());
    }
    write_file(&out.join("eigenvalues.csv"), &csv)?;
    Ok(csv)
}

struct LiftArgs<'a> {
    system: &'a str,
    radius: f64,
    eps: f64,
    param: Option<f64>,
    dim: usize,
    noise: f64,
    steps: usize,
    x0: &'a [f64],
}

type Map = Box<dyn Fn(&[f64]) -> Vec<f64>>;

fn lift_map(system: &str, param: Option<f64>, dim: usize) -> CliResult<(usize, Map)> {
    match system {
        "rotation" => {
            let th = param.unwrap_or(0.1);
            let (s, co) = th.sin_cos();
            Ok((2, Box::new(move |x: &[f64]| vec![co * x[0] - s * x[1], s * x[0] + co * x[1]])))
        }
        "contraction" => {
            let k = param.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&k) {
                return Err(CliError::Usage(format!("contraction factor must be in [0, 1], got {k}")));
            }
            Ok((dim, Box::new(move |x: &[f64]| x.iter().map(|v| k * v).collect())))
        }
        other => Err(CliError::Usage(format!("unknown lift system '{other}' (known: rotation, contraction)"))),
    }
}

fn cmd_lift(c: &Common, a: &LiftArgs) -> CliResult<String> {
    let (d, f) = lift_map(a.system, a.param, a.dim)?;
    let id = |x: &[f64]| x.to_vec();
    let net = build_eps_net(a.radius, a.eps, d)?;
    c.log(|| format!("net with {} points", net.len()));
    let lift: DiscreteLift = if a.noise > 0.0 {
        let normal = Normal::new(0.0, a.noise).map_err(|e| CliError::Usage(e.to_string()))?;
        let mut noise = |rng: &mut rand_chacha::ChaCha8Rng| (0..d).map(|_| normal.sample(rng)).collect();
        markov_lift_stochastic(&*f, &id, &net, &mut noise, 200, c.seed.unwrap_or(0))?
    } else {
        markov_lift(&*f, &id, &net)?
    };
    let out = c.out_or("lift");
    lift.write(&out)?;
    let mut summary = json!({
        "system": a.system,
        "dimension": d,
        "radius": a.radius,
        "eps": a.eps,
        "states": lift.len(),
        "stochastic": a.noise > 0.0,
    });
    if a.steps > 0 {
        let x0 = if a.x0.is_empty() { vec![0.5 * a.radius; d].into_iter().take(d).collect() } else { a.x0.to_vec() };
        if x0.len() != d {
            return Err(CliError::Usage(format!("--x0 needs {d} values")));
        }
        let yp = lift_rollout(&lift, &x0, a.steps)?;
        let mut x = x0;
        let mut csv = String::from("t,error,bound\n");
        let mut worst: f64 = 0.0;
        for t in 1..=a.steps {
            let e = yp[(t - 1) * d..t * d].iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
            let bound = t as f64 * a.eps;
            worst = worst.max(e / bound);
            let _ = writeln!(csv, "{t},{e:e},{bound:e}");
            x = f(&x);
        }
        write_file(&out.join("rollout_error.csv"), &csv)?;
        summary["max_error_over_bound"] = json!(worst);
    }
    let text = pretty(&summary);
    write_file(&out.join("summary.json"), &text)?;
    Ok(text)
}

struct RolloutArgs<'a> {
    checkpoint: Option<&'a Path>,
    context: &'a Path,
    steps: usize,
    predictor: &'a str,
    mode: &'a str,
    save_checkpoint: Option<&'a Path>,
}

/// Predictor names that map onto [`OsfLearner`] and so can be checkpointed.
fn osf_mode(name: &str) -> Option<Mode> {
    match name {
        "sf" => Some(Mode::ObservationsOnly),
        "sf_obs" => Some(Mode::Full),
        "regression" => Some(Mode::RegressionOnly),
        "chebyshev" => Some(Mode::Chebyshev),
        _ => None,
    }
}

fn cmd_rollout(c: &Common, a: &RolloutArgs) -> CliResult<String> {
    let cfg = c.experiment_config(&[])?;
    let settings = cfg.learner_settings()?;
    let context = read_matrix(a.context)?;
    let d = context.cols();
    let seed = cfg.seed;
    let (predictions, diverged, trained) = if let Some(ck_path) = a.checkpoint {
        let ck: Checkpoint = serde_json::from_str(&read_input(ck_path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", ck_path.display())))?;
        if ck.dims[1] != d {
            return Err(CliError::Usage(format!(
                "checkpoint predicts {} outputs but the context has {d} columns",
                ck.dims[1]
            )));
        }
        let mode = Mode::parse(a.mode)?;
        let mut s = settings.clone();
        s.h = ck.h;
        let mut p = OsfLearner::new("checkpoint", mode, ck.m, ck.dims[0], d, &s)?;
        p.load_params(OsfParams::from_checkpoint(&ck)?)?;
        let r = autoregressive_rollout(&mut p, context.as_slice(), ck.dims[0], a.steps)?;
        (r.predictions, r.diverged, None)
    } else if let Some(mode) = osf_mode(a.predictor) {
        let m = if mode == Mode::RegressionOnly { settings.m.max(1) } else { settings.m };
        let mut p = OsfLearner::new(a.predictor, mode, m, 0, d, &settings)?;
        train(&mut p, &context)?;
        let r = autoregressive_rollout(&mut p, &[], 0, a.steps)?;
        (r.predictions, r.diverged, Some(p.params().to_checkpoint()))
    } else {
        if a.save_checkpoint.is_some() {
            return Err(CliError::Usage(format!("predictor '{}' has no checkpoint format", a.predictor)));
        }
        let mut p = build_predictor(a.predictor, 0, d, &settings, seed)?;
        train(p.as_mut(), &context)?;
        let r = autoregressive_rollout(p.as_mut(), &[], 0, a.steps)?;
        (r.predictions, r.diverged, None)
    };
    if let (Some(path), Some(ck)) = (a.save_checkpoint, &trained) {
        write_file(path, &pretty(&serde_json::to_value(ck).expect("checkpoint serialises")))?;
    }
    let mut csv = String::from("step");
    for i in 0..d {
        let _ = write!(csv, ",y_{i}");
    }
    csv.push('\n');
    for (k, row) in predictions.chunks(d).enumerate() {
        let _ = write!(csv, "{}", context.rows() + k);
        for v in row {
            let _ = write!(csv, ",{v:e}");
        }
        csv.push('\n');
    }
    if let Some(out) = &c.out {
        write_file(&out.join("rollout.csv"), &csv)?;
    }
    if diverged {
        eprintln!("osf-lab: rollout diverged (forecasts pinned at the clip radius)");
    }
    Ok(csv)
}

/// Streams the context through `p` with learning on, inputs held at zero.
fn train(p: &mut dyn StreamingPredictor, context: &Mat) -> CliResult<()> {
    let u: Vec<f64> = Vec::new();
    for t in 0..context.rows() {
        p.predict_next()?;
        p.observe(&u, context.row(t))?;
    }
    Ok(())
}

fn cmd_simulate(c: &Common) -> CliResult<String> {
    let cfg = c.experiment_config(&[])?;
    let ep = generate_episode(&cfg, cfg.seed)?;
    let traj = Trajectory {
        d_in: ep.d_in,
        d_out: ep.d_out,
        u: ep.inputs.clone(),
        y: ep.y.clone(),
        w: None,
        meta: TrajectoryMeta { kind: format!("{:?}", cfg.system), seed: Some(cfg.seed), d_h: Some(cfg.dim), dt: None },
    };
    let out = c.out_or("out");
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let path = out.join("trajectory.csv");
    traj.write(&path)?;
    Ok(format!("wrote {} ({} steps, d_in {}, d_out {})\n", path.display(), traj.len(), traj.d_in, traj.d_out))
}
