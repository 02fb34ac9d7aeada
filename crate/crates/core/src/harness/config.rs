use crate::baselines::{LearnerSettings, REGISTRY};
use crate::error::{OsfError, Result};
use crate::optimizers::OptimizerSpec;
use crate::predictor::LossKind;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    /// Gaussian A with unit spectral norm, d_in = d_out = 1.
    LdsGaussian,
    /// Cyclic permutation, d_in = d_out = 1.
    LdsPermutation,
    Lorenz,
    Pendulum,
    Langevin,
    LowerboundAdversary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observe {
    Full,
    /// One Gaussian linear functional of the state, drawn per seed.
    Partial,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disturbance {
    None,
    Sinusoid,
}

/// One experiment: a system family, the predictors streamed over it, and
/// the learner hyperparameters they share. Flat so it reads as a TOML file
/// and takes `key=value` overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub system: SystemKind,
    pub observe: Observe,
    /// LDS hidden size, Langevin dimension, or adversary block length.
    pub dim: usize,
    pub disturbance: Disturbance,
    pub langevin_coupling: f64,
    pub horizon: usize,
    pub seeds: usize,
    pub seed: u64,
    pub smoothing: usize,
    pub predictors: Vec<String>,
    /// Predictors receive u_{t+lead} alongside y_t (LDS systems only).
    pub input_lead: usize,
    pub filter_len: usize,
    pub h: usize,
    pub m: usize,
    pub r: f64,
    pub diameter: f64,
    pub optimizer: String,
    pub lr: f64,
    pub cocob_alpha: f64,
    pub avw_lambda: f64,
    pub ogd_eta0: f64,
    pub train_loss: LossKind,
    pub lds_hidden: usize,
    pub lds_lr: f64,
    pub lds_bptt: usize,
    pub rbf_centers: usize,
    pub sfedmd_filters: usize,
    /// eDMD/SFeDMD refit period; 0 means horizon / 10.
    pub refit_every: usize,
    pub ridge: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = LearnerSettings::default();
        ExperimentConfig {
            name: "custom".into(),
            system: SystemKind::LdsPermutation,
            observe: Observe::Full,
            dim: 16,
            disturbance: Disturbance::None,
            langevin_coupling: -0.2,
            horizon: 10_000,
            seeds: 12,
            seed: 0,
            smoothing: 100,
            predictors: vec!["sf_open".into(), "sf_obs".into()],
            input_lead: 1,
            filter_len: s.filter_len,
            h: s.h,
            m: s.m,
            r: s.r,
            diameter: s.diameter,
            optimizer: "cocob".into(),
            lr: 1e-3,
            cocob_alpha: 100.0,
            avw_lambda: 1.0,
            ogd_eta0: 0.1,
            train_loss: s.train_loss,
            lds_hidden: s.lds_hidden,
            lds_lr: s.lds_lr,
            lds_bptt: s.lds_bptt,
            rbf_centers: s.rbf_centers,
            sfedmd_filters: s.sfedmd_filters,
            refit_every: 0,
            ridge: s.ridge,
        }
    }
}

/// Names accepted by [`recipe`].
pub const RECIPES: &[&str] = &[
    "lds_gaussian_noise",
    "lds_permutation",
    "lorenz_full",
    "lorenz_partial",
    "pendulum_full",
    "pendulum_partial",
    "langevin64",
    "langevin64_confined",
    "lowerbound_adversary",
];

const NONLINEAR: &[&str] = &["sf", "lds", "edmd", "sfedmd"];

/// Named experiment configurations.
pub fn recipe(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig { name: name.into(), ..ExperimentConfig::default() };
    let nonlinear = |system, observe, smoothing| ExperimentConfig {
        system,
        observe,
        smoothing,
        horizon: 50_000,
        predictors: NONLINEAR.iter().map(|s| s.to_string()).collect(),
        input_lead: 0,
        filter_len: 512,
        ..base.clone()
    };
    Ok(match name {
        "lds_gaussian_noise" => ExperimentConfig {
            system: SystemKind::LdsGaussian,
            dim: 128,
            disturbance: Disturbance::Sinusoid,
            horizon: 20_000,
            smoothing: 100,
            ..base
        },
        "lds_permutation" => {
            ExperimentConfig { system: SystemKind::LdsPermutation, dim: 16, horizon: 50_000, smoothing: 1000, ..base }
        }
        "lorenz_full" => nonlinear(SystemKind::Lorenz, Observe::Full, 1000),
        "lorenz_partial" => nonlinear(SystemKind::Lorenz, Observe::Partial, 1000),
        "pendulum_full" => nonlinear(SystemKind::Pendulum, Observe::Full, 1000),
        "pendulum_partial" => nonlinear(SystemKind::Pendulum, Observe::Partial, 1000),
        "langevin64" | "langevin64_confined" => ExperimentConfig {
            dim: 64,
            horizon: 20_000,
            langevin_coupling: if name == "langevin64" { -0.2 } else { 0.2 },
            // 64-dimensional lifts make the SFeDMD regression wide; fewer filters and more ridge keep it stable
            sfedmd_filters: 8,
            ridge: 1e-4,
            ..nonlinear(SystemKind::Langevin, Observe::Full, 200)
        },
        "lowerbound_adversary" => ExperimentConfig {
            system: SystemKind::LowerboundAdversary,
            dim: 8,
            horizon: 8000,
            seeds: 200,
            smoothing: 100,
            predictors: vec!["sf".into(), "sf_obs".into(), "last_value".into()],
            input_lead: 0,
            filter_len: 128,
            ..base
        },
        other => return Err(OsfError::Config(format!("unknown recipe '{other}' (known: {})", RECIPES.join(", ")))),
    })
}

fn known_keys() -> Vec<String> {
    let table = toml::Table::try_from(ExperimentConfig::default()).expect("config serialises");
    table.keys().cloned().collect()
}

fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
}

/// Parses one `key=value` override; values that are not valid TOML are taken as strings.
pub fn parse_override(s: &str) -> Result<(String, toml::Value)> {
    let Some((k, v)) = s.split_once('=') else {
        return Err(OsfError::Config(format!("override '{s}' is not key=value")));
    };
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(OsfError::Config(format!("override '{s}' has an empty key")));
    }
    let value = match format!("v = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(v.to_string()),
    };
    Ok((k.to_string(), value))
}

/// Resolves a config from optional TOML text plus overrides.
///
/// A `recipe = "..."` key (in the file or an override) selects the starting
/// point; every other key replaces the recipe's value. Unknown keys are errors
/// that name the key (and the line, for file keys).
pub fn load_config(text: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut user = match text {
        Some(t) => t.parse::<toml::Table>().map_err(|e| OsfError::Config(format!("config parse error: {e}")))?,
        None => toml::Table::new(),
    };
    let known = known_keys();
    for k in user.keys() {
        if k != "recipe" && !known.contains(k) {
            let at = text.and_then(|t| line_of(t, k)).map(|l| format!(" (line {})", l + 1)).unwrap_or_default();
            return Err(OsfError::Config(format!("unknown key '{k}'{at}")));
        }
    }
    for o in overrides {
        let (k, v) = parse_override(o)?;
        if k != "recipe" && !known.contains(&k) {
            return Err(OsfError::Config(format!("unknown key '{k}' in --set")));
        }
        user.insert(k, v);
    }
    let base = match user.remove("recipe") {
        Some(toml::Value::String(r)) => recipe(&r)?,
        Some(other) => return Err(OsfError::Config(format!("recipe must be a string, got {other}"))),
        None => ExperimentConfig::default(),
    };
    let mut table = toml::Table::try_from(base).map_err(|e| OsfError::Internal(e.to_string()))?;
    for (k, v) in user {
        table.insert(k, v);
    }
    let cfg: ExperimentConfig =
        table.try_into().map_err(|e: toml::de::Error| OsfError::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OsfError::Config(m));
        if self.seeds == 0 {
            return bad("seeds must be at least 1".into());
        }
        if self.smoothing == 0 || self.horizon < self.smoothing {
            return bad(format!("need 1 <= smoothing <= horizon, got {} and {}", self.smoothing, self.horizon));
        }
        if self.horizon < 10 {
            return bad("horizon must be at least 10".into());
        }
        if self.predictors.is_empty() {
            return bad("no predictors listed".into());
        }
        for p in &self.predictors {
            if !REGISTRY.contains(&p.as_str()) {
                return bad(format!("unknown predictor '{p}' (known: {})", REGISTRY.join(", ")));
            }
        }
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.system == SystemKind::LowerboundAdversary && !self.horizon.is_multiple_of(self.dim) {
            return bad(format!("adversary horizon {} must be a multiple of dim {}", self.horizon, self.dim));
        }
        self.optimizer_spec()?.validate()
    }

    pub fn optimizer_spec(&self) -> Result<OptimizerSpec> {
        Ok(match self.optimizer.as_str() {
            "cocob" => OptimizerSpec::Cocob { alpha: self.cocob_alpha },
            "adam" => OptimizerSpec::adam(self.lr),
            "ogd" => OptimizerSpec::Ogd { eta0: self.ogd_eta0, diameter: self.diameter },
            "avw" => OptimizerSpec::Avw { lambda: self.avw_lambda },
            other => return Err(OsfError::Config(format!("unknown optimizer '{other}' (cocob, adam, ogd, avw)"))),
        })
    }

    pub fn learner_settings(&self) -> Result<LearnerSettings> {
        Ok(LearnerSettings {
            horizon: self.horizon,
            filter_len: self.filter_len,
            h: self.h,
            m: self.m,
            r: self.r,
            diameter: self.diameter,
            optimizer: self.optimizer_spec()?,
            train_loss: self.train_loss,
            lds_hidden: self.lds_hidden,
            lds_lr: self.lds_lr,
            lds_bptt: self.lds_bptt,
            rbf_centers: self.rbf_centers,
            sfedmd_filters: self.sfedmd_filters,
            refit_every: (self.refit_every > 0).then_some(self.refit_every),
            ridge: self.ridge,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical TOML form, hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
