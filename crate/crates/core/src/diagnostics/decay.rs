//! Power-law fits of sup norms against time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t_lo: f64,
    pub t_hi: f64,
    /// slope of log(value) against log(t)
    pub exponent: f64,
    pub intercept: f64,
    /// root-mean-square residual in log space
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares slope on log-log axes; needs >= 8 positive samples spanning
/// a decade in t.
pub fn decay_fit(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() {
        return Err(Error::InsufficientSpan(format!("{} times but {} values", times.len(), values.len())));
    }
    let pts: Vec<(f64, f64)> =
        times.iter().zip(values).filter(|(t, v)| **t > 0.0 && **v > 0.0).map(|(t, v)| (t.ln(), v.ln())).collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSpan(format!("{} usable samples, need {MIN_SAMPLES}", pts.len())));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < std::f64::consts::LN_10 * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan(format!("time span {:.3e}..{:.3e} is under a decade", lo.exp(), hi.exp())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit { t_lo: lo.exp(), t_hi: hi.exp(), exponent: slope, intercept, residual, samples: pts.len() })
}

pub fn log_spaced(t_lo: f64, t_hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (t_lo.ln(), t_hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1).max(1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_power_laws() {
        let t = log_spaced(0.1, 100.0, 12);
        let f = decay_fit(&t, &t.iter().map(|t| 3.0 / t.sqrt()).collect::<Vec<_>>()).unwrap();
        assert!((f.exponent + 0.5).abs() < 1e-12);
        let c = decay_fit(&t, &vec![2.0; 12]).unwrap();
        assert!(c.exponent.abs() < 1e-12);
        let short = log_spaced(1.0, 5.0, 10);
        assert!(matches!(decay_fit(&short, &vec![1.0; 10]), Err(Error::InsufficientSpan(_))));
        assert!(matches!(decay_fit(&t[..5], &vec![1.0; 5]), Err(Error::InsufficientSpan(_))));
    }
}
