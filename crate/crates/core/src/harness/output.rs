use super::run::RunRecord;
use crate::error::Result;
use serde_json::json;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Writes `losses.csv` (step, predictor, seed, loss, l2, smoothed), `summary.json`
/// and `config.toml` into `dir`, replacing earlier files.
pub fn write_run(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let w = record.config.smoothing;
    let mut f = BufWriter::new(fs::File::create(dir.join("losses.csv"))?);
    writeln!(f, "step,predictor,seed,loss,l2,smoothed")?;
    let mut line = String::new();
    for p in &record.predictors {
        for run in &p.runs {
            let mut sum = 0.0;
            for (t, (&loss, &l2)) in run.losses.iter().zip(&run.l2).enumerate() {
                sum += loss;
                if t >= w {
                    sum -= run.losses[t - w];
                }
                line.clear();
                write!(line, "{t},{},{},{loss},{l2},", p.name, run.seed).unwrap();
                if t + 1 >= w {
                    write!(line, "{}", sum / w as f64).unwrap();
                }
                writeln!(f, "{line}")?;
            }
        }
    }
    f.flush()?;
    fs::write(dir.join("summary.json"), summary_json(record))?;
    fs::write(dir.join("config.toml"), record.config.to_toml())?;
    Ok(())
}

fn finite(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// Decile ratios, divergence flags, spectral gaps and run metadata.
pub fn summary_json(record: &RunRecord) -> String {
    let preds: Vec<_> = record
        .predictors
        .iter()
        .map(|p| {
            json!({
                "name": p.name,
                "first_decile": finite(p.deciles.first),
                "final_decile": finite(p.deciles.last),
                "decile_ratio": finite(p.deciles.ratio),
                "l2_final_decile": finite(p.l2_deciles.last),
                "eval_l2": p.eval_l2.map(finite),
                "diverged_seeds": p.diverged_seeds(),
                "errors": p.runs.iter().filter_map(|r| r.error.as_ref().map(|e| json!({"seed": r.seed, "error": e}))).collect::<Vec<_>>(),
                "spectral_gaps": p.spectral_gaps.iter().map(|g| g.map(finite)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let v = json!({
        "name": record.config.name,
        "config_hash": record.config_hash,
        "horizon": record.config.horizon,
        "smoothing": record.config.smoothing,
        "seeds": record.seeds,
        "wall_time_s": record.wall_time_s,
        "predictors": preds,
    });
    serde_json::to_string_pretty(&v).expect("json")
}
