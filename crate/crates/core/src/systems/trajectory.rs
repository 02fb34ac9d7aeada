use crate::error::{OsfError, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Sidecar metadata written next to a trajectory CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub kind: String,
    pub seed: Option<u64>,
    /// Hidden/state dimension, when known.
    pub d_h: Option<usize>,
    pub dt: Option<f64>,
}

/// Inputs and observations, both flat row-major over time.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub d_in: usize,
    pub d_out: usize,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    /// Disturbances, flat `T × d_h`, when the generator records them.
    pub w: Option<Vec<f64>>,
    pub meta: TrajectoryMeta,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(flatten)]
    meta: TrajectoryMeta,
    d_in: usize,
    d_out: usize,
    len: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        if self.d_out == 0 {
            0
        } else {
            self.y.len() / self.d_out
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u_at(&self, t: usize) -> &[f64] {
        &self.u[t * self.d_in..(t + 1) * self.d_in]
    }

    pub fn y_at(&self, t: usize) -> &[f64] {
        &self.y[t * self.d_out..(t + 1) * self.d_out]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 0..self.d_in {
            let _ = write!(s, ",u_{i}");
        }
        for i in 0..self.d_out {
            let _ = write!(s, ",y_{i}");
        }
        s.push('\n');
        for t in 0..self.len() {
            let _ = write!(s, "{t}");
            for v in self.u_at(t).iter().chain(self.y_at(t)) {
                let _ = write!(s, ",{v:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn sidecar_path(csv: &Path) -> PathBuf {
        csv.with_extension("json")
    }

    /// Writes `path` (CSV) and the `.json` sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| OsfError::Io(format!("{}: {e}", path.display())))?;
        let side = Sidecar { meta: self.meta.clone(), d_in: self.d_in, d_out: self.d_out, len: self.len() };
        let side_path = Self::sidecar_path(path);
        let json = serde_json::to_string_pretty(&side).map_err(|e| OsfError::Internal(e.to_string()))?;
        std::fs::write(&side_path, json).map_err(|e| OsfError::Io(format!("{}: {e}", side_path.display())))
    }

    /// Reads a CSV written by [`Trajectory::write`] together with its sidecar.
    pub fn read(path: &Path) -> Result<Trajectory> {
        let io = |e: std::io::Error| OsfError::Io(format!("{}: {e}", path.display()));
        let side_path = Self::sidecar_path(path);
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(&side_path).map_err(io)?)
            .map_err(|e| OsfError::InvalidInput(format!("{}: {e}", side_path.display())))?;
        let text = std::fs::read_to_string(path).map_err(io)?;
        let width = 1 + side.d_in + side.d_out;
        let (mut u, mut y) = (Vec::new(), Vec::new());
        for (ln, line) in text.lines().enumerate().skip(1) {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| OsfError::InvalidInput(format!("line {}: {e}", ln + 1)))?;
            if vals.len() != width {
                return Err(OsfError::InvalidInput(format!(
                    "line {}: {} fields, expected {width}",
                    ln + 1,
                    vals.len()
                )));
            }
            u.extend_from_slice(&vals[1..1 + side.d_in]);
            y.extend_from_slice(&vals[1 + side.d_in..]);
        }
        Ok(Trajectory { d_in: side.d_in, d_out: side.d_out, u, y, w: None, meta: side.meta })
    }
}
