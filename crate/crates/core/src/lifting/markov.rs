use super::net::EpsNet;
use crate::error::{invalid, OsfError, Result};
use crate::numerics::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::Path;

/// Column-wise transition operator A′ of a lift.
#[derive(Clone, Debug, PartialEq)]
pub enum Transition {
    /// Column j is the one-hot vector at `target[j]`.
    Deterministic(Vec<usize>),
    /// Column j as sparse (row, probability) pairs summing to 1.
    Stochastic(Vec<Vec<(usize, f64)>>),
}

/// Finite-state linear system z_{t+1} = A′z_t, y′_t = C′z_t over net points.
#[derive(Clone, Debug)]
pub struct DiscreteLift {
    pub net: EpsNet,
    pub transition: Transition,
    /// d_Y × N readout, column j = h(s_j).
    pub readout: Mat,
}

impl DiscreteLift {
    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    /// Dense N×N A′.
    pub fn dense_transition(&self) -> Mat {
        let n = self.len();
        let mut a = Mat::zeros(n, n);
        match &self.transition {
            Transition::Deterministic(t) => t.iter().enumerate().for_each(|(j, &i)| a[(i, j)] = 1.0),
            Transition::Stochastic(cols) => {
                for (j, col) in cols.iter().enumerate() {
                    for &(i, p) in col {
                        a[(i, j)] += p;
                    }
                }
            }
        }
        a
    }

    /// One application of A′ to a distribution over net points.
    pub fn step(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        for (j, &zj) in z.iter().enumerate() {
            if zj == 0.0 {
                continue;
            }
            match &self.transition {
                Transition::Deterministic(t) => out[t[j]] += zj,
                Transition::Stochastic(cols) => cols[j].iter().for_each(|&(i, p)| out[i] += p * zj),
            }
        }
        out
    }

    /// Writes `net.json`, `transition.txt` (row col value triplets) and `readout.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("net.json"), serde_json::to_string_pretty(&self.net)?)?;
        let mut s = String::new();
        match &self.transition {
            Transition::Deterministic(t) => {
                s.push_str("# deterministic\n");
                for (j, &i) in t.iter().enumerate() {
                    let _ = writeln!(s, "{i} {j} 1");
                }
            }
            Transition::Stochastic(cols) => {
                s.push_str("# stochastic\n");
                for (j, col) in cols.iter().enumerate() {
                    for &(i, p) in col {
                        let _ = writeln!(s, "{i} {j} {p:e}");
                    }
                }
            }
        }
        std::fs::write(dir.join("transition.txt"), s)?;
        std::fs::write(dir.join("readout.txt"), self.readout.to_text())?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<DiscreteLift> {
        let mut net: EpsNet = serde_json::from_str(&std::fs::read_to_string(dir.join("net.json"))?)
            .map_err(|e| OsfError::InvalidInput(format!("net.json: {e}")))?;
        net.reindex();
        let text = std::fs::read_to_string(dir.join("transition.txt"))?;
        let deterministic = text.starts_with("# deterministic");
        let n = net.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || OsfError::InvalidInput(format!("bad transition line: {line}"));
            if f.len() != 3 {
                return Err(bad());
            }
            let i: usize = f[0].parse().map_err(|_| bad())?;
            let j: usize = f[1].parse().map_err(|_| bad())?;
            let p: f64 = f[2].parse().map_err(|_| bad())?;
            if i >= n || j >= n {
                return Err(bad());
            }
            cols[j].push((i, p));
        }
        let transition = if deterministic {
            let t = cols
                .iter()
                .map(|c| match c.as_slice() {
                    [(i, _)] => Ok(*i),
                    _ => Err(OsfError::InvalidInput("deterministic column is not one-hot".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            Transition::Deterministic(t)
        } else {
            Transition::Stochastic(cols)
        };
        let readout = Mat::parse_text(&std::fs::read_to_string(dir.join("readout.txt"))?)?;
        Ok(DiscreteLift { net, transition, readout })
    }
}

fn readout(net: &EpsNet, h: &dyn Fn(&[f64]) -> Vec<f64>) -> Result<Mat> {
    let n = net.len();
    let first = h(&net.point(0));
    let mut c = Mat::zeros(first.len(), n);
    for j in 0..n {
        let v = h(&net.point(j));
        if v.len() != first.len() {
            return invalid("observation map changes output dimension");
        }
        c.set_col(j, &v);
    }
    Ok(c)
}

/// Deterministic lift: A′ sends s_j to the net point nearest f(s_j).
pub fn markov_lift(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    h: &dyn Fn(&[f64]) -> Vec<f64>,
    net: &EpsNet,
) -> Result<DiscreteLift> {
    if net.is_empty() {
        return invalid("empty net");
    }
    let target = (0..net.len()).map(|j| net.project(&f(&net.point(j)))).collect::<Result<Vec<_>>>()?;
    Ok(DiscreteLift { net: net.clone(), transition: Transition::Deterministic(target), readout: readout(net, h)? })
}

/// Stochastic lift: column j is the empirical law of π(f(s_j) + w) over `m` draws.
pub fn markov_lift_stochastic(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    h: &dyn Fn(&[f64]) -> Vec<f64>,
    net: &EpsNet,
    noise: &mut dyn FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    m: usize,
    seed: u64,
) -> Result<DiscreteLift> {
    if m < 100 {
        return invalid("stochastic lift needs at least 100 samples per column");
    }
    if net.is_empty() {
        return invalid("empty net");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = Vec::with_capacity(net.len());
    let mut counts = vec![0usize; net.len()];
    for j in 0..net.len() {
        let fx = f(&net.point(j));
        let mut hit = Vec::new();
        for _ in 0..m {
            let w = noise(&mut rng);
            let x: Vec<f64> = fx.iter().zip(&w).map(|(a, b)| a + b).collect();
            let i = net.project(&x)?;
            if counts[i] == 0 {
                hit.push(i);
            }
            counts[i] += 1;
        }
        hit.sort_unstable();
        cols.push(hit.iter().map(|&i| (i, std::mem::take(&mut counts[i]) as f64 / m as f64)).collect());
    }
    Ok(DiscreteLift { net: net.clone(), transition: Transition::Stochastic(cols), readout: readout(net, h)? })
}

/// y′_t = C′A′^{t−1}z_1 for t = 1..T with z_1 the point mass at π(x0); flat T × d_Y.
pub fn lift_rollout(lift: &DiscreteLift, x0: &[f64], t_len: usize) -> Result<Vec<f64>> {
    if crate::numerics::norm(x0) > lift.net.radius * (1.0 + 1e-12) {
        return invalid("x0 lies outside the net radius");
    }
    let n = lift.len();
    let mut z = vec![0.0; n];
    z[lift.net.project(x0)?] = 1.0;
    let mut out = Vec::with_capacity(t_len * lift.readout.rows());
    for _ in 0..t_len {
        out.extend(lift.readout.matvec(&z));
        z = lift.step(&z);
    }
    Ok(out)
}
