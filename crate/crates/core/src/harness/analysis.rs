use crate::error::{invalid, OsfError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Trailing moving average; output has `len − window + 1` entries.
pub fn smooth(losses: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return invalid("smoothing window must be at least 1");
    }
    if window > losses.len() {
        return invalid(format!("smoothing window {window} exceeds series length {}", losses.len()));
    }
    let mut out = Vec::with_capacity(losses.len() - window + 1);
    // running sum with periodic exact recomputation to bound drift
    let mut sum: f64 = losses[..window].iter().sum();
    out.push(sum / window as f64);
    for i in window..losses.len() {
        if (i - window + 1).is_multiple_of(4096) {
            sum = losses[i + 1 - window..=i].iter().sum();
        } else {
            sum += losses[i] - losses[i - window];
        }
        out.push(sum / window as f64);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecileSummary {
    pub first: f64,
    pub last: f64,
    /// last / first; 1 when both are zero.
    pub ratio: f64,
}

/// Means of the first and last 10% of a (smoothed) loss curve.
pub fn decile_summary(losses: &[f64]) -> Result<DecileSummary> {
    if losses.len() < 10 {
        return invalid(format!("decile summary needs at least 10 points, got {}", losses.len()));
    }
    let k = losses.len() / 10;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first = mean(&losses[..k]);
    let last = mean(&losses[losses.len() - k..]);
    let ratio = if first == 0.0 && last == 0.0 { 1.0 } else { last / first };
    Ok(DecileSummary { first, last, ratio })
}

/// 1 − |λ₂| with eigenvalues sorted by decreasing magnitude.
pub fn spectral_gap(eigenvalues: &[Complex64]) -> Result<f64> {
    if eigenvalues.len() < 2 {
        return Err(OsfError::Domain("spectral gap needs at least two eigenvalues".into()));
    }
    let mut mags: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    Ok(1.0 - mags[1])
}

/// Pointwise mean of equal-length curves.
pub fn mean_curve(curves: &[&[f64]]) -> Result<Vec<f64>> {
    let Some(first) = curves.first() else {
        return invalid("no curves to average");
    };
    if curves.iter().any(|c| c.len() != first.len()) {
        return invalid("curves differ in length");
    }
    let n = curves.len() as f64;
    Ok((0..first.len()).map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothing_examples() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(smooth(&x, 1).unwrap(), x.to_vec());
        assert_eq!(smooth(&[0.0, 2.0, 4.0], 2).unwrap(), vec![1.0, 3.0]);
        assert_eq!(smooth(&[2.5; 7], 3).unwrap(), vec![2.5; 5]);
        assert!(smooth(&x, 6).is_err());
        assert!(smooth(&x, 0).is_err());
    }

    #[test]
    fn long_smoothing_matches_direct_means() {
        let x: Vec<f64> =
            (0..20_000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 1e6 * (i == 5) as u8 as f64).collect();
        let s = smooth(&x, 100).unwrap();
        for i in [0, 1, 4095, 4096, 4097, 12_345, s.len() - 1] {
            let direct = x[i..i + 100].iter().sum::<f64>() / 100.0;
            assert!((s[i] - direct).abs() < 1e-9, "{i}");
        }
    }

    #[test]
    fn decile_examples() {
        let ramp: Vec<f64> = (0..100).map(|i| 10.0 - 9.0 * i as f64 / 99.0).collect();
        assert!(decile_summary(&ramp).unwrap().ratio < 1.0);
        assert_eq!(decile_summary(&[4.0; 30]).unwrap().ratio, 1.0);
        let rev: Vec<f64> = ramp.iter().rev().copied().collect();
        let (a, b) = (decile_summary(&ramp).unwrap(), decile_summary(&rev).unwrap());
        assert!((a.ratio * b.ratio - 1.0).abs() < 1e-12);
        assert!(decile_summary(&[1.0; 9]).is_err());
    }

    #[test]
    fn gap_examples() {
        let c = |r: f64| Complex64::new(r, 0.0);
        assert!((spectral_gap(&[c(1.0), c(0.998)]).unwrap() - 0.002).abs() < 1e-12);
        assert!((spectral_gap(&[c(0.5), c(1.0), c(0.9)]).unwrap() - 0.1).abs() < 1e-12);
        assert!(spectral_gap(&[c(1.0)]).is_err());
    }
}
