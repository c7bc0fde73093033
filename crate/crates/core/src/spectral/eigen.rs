//! Roots of the characteristic quartic, branch labels and gap scans.
//!
//! The reactant root -D eta^2/v^2 is known exactly, so only the (v, u, E)
//! cubic is solved numerically: scaled companion matrix, complex Schur, one
//! Newton polish per root.
//!
//! Labels follow two regimes. While the cubic has a complex-conjugate pair
//! (small eta) the pair is the acoustic branch: lambda_2 has negative
//! imaginary part, lambda_3 positive, lambda_1 is the real root. Once all three
//! roots are real (large eta) they are labeled by decreasing real part, so
//! lambda_1 is the bounded branch and lambda_3 the fastest-decaying one. The
//! two regimes meet where the acoustic pair collides on the real axis.

use nalgebra::{Matrix3, Schur};
use serde::{Deserialize, Serialize};

use super::matrices::{characteristic_poly, horner, horner_derivative, CharPoly, SystemMatrices, C64};
use crate::error::{Error, Result};

pub const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// eta = 0, every root vanishes
    Zero,
    /// acoustic pair present
    Oscillatory,
    /// all roots real
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSet {
    pub eta: f64,
    /// lambda_1..lambda_4
    pub lambdas: [C64; 4],
    pub label4_exact: bool,
    pub regime: Regime,
    /// |P(lambda_j)| / scale_j
    pub residuals: [f64; 4],
}

impl EigenSet {
    pub fn cubic_roots(&self) -> [C64; 3] {
        [self.lambdas[0], self.lambdas[1], self.lambdas[2]]
    }

    pub fn max_real_part(&self) -> f64 {
        self.lambdas.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn magnitude(&self) -> f64 {
        self.lambdas.iter().map(|l| l.norm()).fold(1.0, f64::max)
    }
}

/// Roots of a monic cubic b0 + b1 x + b2 x^2 + x^3, unordered.
pub fn cubic_roots(b: &[C64; 4]) -> [C64; 3] {
    let zero = C64::new(0.0, 0.0);
    // Fujiwara-type scale so the companion matrix has O(1) entries
    let s = (0..3)
        .map(|k| b[k].norm().powf(1.0 / (3 - k) as f64))
        .fold(0.0, f64::max);
    if s == 0.0 {
        return [zero; 3];
    }
    let b2 = b[2] / s;
    let b1 = b[1] / (s * s);
    let b0 = b[0] / (s * s * s);
    let one = C64::new(1.0, 0.0);
    #[rustfmt::skip]
    let comp = Matrix3::new(
        -b2, -b1, -b0,
        one, zero, zero,
        zero, one, zero,
    );
    let (_, t) = Schur::new(comp).unpack();
    let mut roots = [t[(0, 0)] * s, t[(1, 1)] * s, t[(2, 2)] * s];
    for r in roots.iter_mut() {
        let f = horner(b, *r);
        let df = horner_derivative(b, *r);
        if df.norm() > 0.0 {
            let cand = *r - f / df;
            if horner(b, cand).norm() <= f.norm() {
                *r = cand;
            }
        }
    }
    roots
}

/// Assigns labels 1..3 to the cubic roots following the two-regime rule.
pub fn label_cubic_roots(roots: [C64; 3]) -> ([C64; 3], Regime) {
    let mag = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    if mag == 0.0 {
        return (roots, Regime::Zero);
    }
    let max_im = roots.iter().map(|r| r.im.abs()).fold(0.0, f64::max);
    let mut r = roots;
    if max_im > 1e-9 * mag.max(1e-300) {
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        // r[0] most negative Im (lambda_2), r[2] most positive (lambda_3)
        ([r[1], r[0], r[2]], Regime::Oscillatory)
    } else {
        r.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        (r, Regime::Real)
    }
}

pub fn eigenvalues_with_poly(eta: f64, sm: &SystemMatrices, cp: &CharPoly) -> Result<EigenSet> {
    let zero = C64::new(0.0, 0.0);
    let l4 = C64::new(cp.linear_root, 0.0);
    if eta == 0.0 {
        return Ok(EigenSet {
            eta,
            lambdas: [zero; 4],
            label4_exact: true,
            regime: Regime::Zero,
            residuals: [0.0; 4],
        });
    }
    let _ = sm;
    let (labeled, regime) = label_cubic_roots(cubic_roots(&cp.cubic));
    let lambdas = [labeled[0], labeled[1], labeled[2], l4];
    let mut residuals = [0.0; 4];
    let mut worst: f64 = 0.0;
    for (j, &l) in lambdas.iter().enumerate() {
        residuals[j] = cp.eval(l).norm() / cp.scale(l);
        worst = worst.max(residuals[j]);
    }
    if !(worst <= RESIDUAL_LIMIT) {
        return Err(Error::RootResidualTooLarge { eta, residual: worst, limit: RESIDUAL_LIMIT });
    }
    Ok(EigenSet { eta, lambdas, label4_exact: true, regime, residuals })
}

pub fn eigenvalues_at(eta: f64, sm: &SystemMatrices) -> Result<EigenSet> {
    let cp = characteristic_poly(eta, sm);
    eigenvalues_with_poly(eta, sm, &cp)
}

const PERMS3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Result of tracking labels along a monotone eta grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrack {
    pub sets: Vec<EigenSet>,
    /// adjacent sample pairs between which the regime changes
    pub regime_switches: Vec<(f64, f64)>,
    /// adjacent sample pairs whose best and second-best matchings are within 10%
    pub warnings: Vec<(f64, f64)>,
}

/// Labels every sample, then checks that within each regime the labels agree
/// with minimal squared-distance matching between neighbours.
pub fn branch_track(eta_grid: &[f64], sm: &SystemMatrices) -> Result<BranchTrack> {
    let increasing = eta_grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = eta_grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return Err(Error::InvalidParameter("eta grid must be strictly monotone".into()));
    }
    let sets = eta_grid.iter().map(|&e| eigenvalues_at(e, sm)).collect::<Result<Vec<_>>>()?;
    let mut regime_switches = Vec::new();
    let mut warnings = Vec::new();
    for w in sets.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.regime != b.regime {
            regime_switches.push((a.eta, b.eta));
            continue;
        }
        if a.regime == Regime::Zero || b.regime == Regime::Zero {
            continue;
        }
        let ra = a.cubic_roots();
        let rb = b.cubic_roots();
        let norm = a.magnitude().max(b.magnitude()).powi(2);
        let mut costs: Vec<(f64, usize)> = PERMS3
            .iter()
            .enumerate()
            .map(|(k, p)| ((0..3).map(|i| (ra[i] - rb[p[i]]).norm_sqr()).sum::<f64>() / norm, k))
            .collect();
        costs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let (best, best_k) = costs[0];
        let second = costs[1].0;
        if second - best <= 1e-12 * second.max(f64::MIN_POSITIVE) || best_k != 0 && second > 1.1 * best {
            return Err(Error::AmbiguousBranch { from: a.eta, to: b.eta });
        }
        if second <= 1.1 * best {
            warnings.push((a.eta, b.eta));
        }
    }
    Ok(BranchTrack { sets, regime_switches, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// -max Re(lambda_j) over the sampled band
    pub b_tilde: f64,
    pub eta_at_max: f64,
    /// same quantity restricted to the cubic roots
    pub b_cubic: f64,
}

/// Samples `samples` log-spaced eta in [r, big_r] and returns the gap.
pub fn spectral_gap_scan(r: f64, big_r: f64, sm: &SystemMatrices, samples: usize) -> Result<GapReport> {
    if !(r > 0.0 && big_r > r) || samples < 2 {
        return Err(Error::InvalidParameter(format!("gap scan needs 0 < r < R, got [{r}, {big_r}]")));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut worst_cubic = f64::NEG_INFINITY;
    let mut at = r;
    for k in 0..samples {
        let eta = r * (big_r / r).powf(k as f64 / (samples - 1) as f64);
        let es = eigenvalues_at(eta, sm)?;
        let m = es.max_real_part();
        if m > worst {
            worst = m;
            at = eta;
        }
        worst_cubic = worst_cubic.max(es.cubic_roots().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max));
        if m >= 0.0 {
            return Err(Error::GapViolation { eta, max_re: m });
        }
    }
    Ok(GapReport { b_tilde: -worst, eta_at_max: at, b_cubic: -worst_cubic })
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_parameters, equilibrium};
    use crate::spectral::matrices::assemble_linearization;

    fn sm() -> SystemMatrices {
        let p = default_parameters();
        assemble_linearization(&equilibrium(&p), &p)
    }

    #[test]
    fn zero_frequency() {
        let es = eigenvalues_at(0.0, &sm()).unwrap();
        assert!(es.lambdas.iter().all(|l| l.norm() == 0.0));
    }

    #[test]
    fn low_frequency_acoustic_pair() {
        let s = sm();
        let cs = 0.56f64.sqrt();
        for &eta in &[1e-3, 3e-3, 1e-2] {
            let es = eigenvalues_at(eta, &s).unwrap();
            assert_eq!(es.regime, Regime::Oscillatory);
            assert!((es.lambdas[1] + C64::new(0.0, eta * cs)).norm() <= 5.0 * eta * eta);
            assert!((es.lambdas[2] - C64::new(0.0, eta * cs)).norm() <= 5.0 * eta * eta);
        }
    }

    #[test]
    fn high_frequency_bounded_branch() {
        let es = eigenvalues_at(50.0, &sm()).unwrap();
        assert_eq!(es.regime, Regime::Real);
        // leading correction -0.128 eta^-2
        assert!((es.lambdas[0].re + 0.4).abs() < 0.2 / 2500.0);
        let l = es.lambdas;
        assert!(l[0].re > l[1].re && l[1].re > l[3].re && l[3].re > l[2].re);
    }

    #[test]
    fn tracking_is_reversible_and_switches_once() {
        let s = sm();
        let grid = logspace(0.1, 100.0, 300);
        let fwd = branch_track(&grid, &s).unwrap();
        let mut rev_grid = grid.clone();
        rev_grid.reverse();
        let rev = branch_track(&rev_grid, &s).unwrap();
        for (a, b) in fwd.sets.iter().zip(rev.sets.iter().rev()) {
            assert_eq!(a.lambdas, b.lambdas);
        }
        assert_eq!(fwd.regime_switches.len(), 1);
        let (lo, hi) = fwd.regime_switches[0];
        assert!(lo > 1.0 && hi < 1.3, "switch at ({lo}, {hi})");
        for es in &fwd.sets {
            assert_eq!(es.lambdas[3].re, -10.0 / 7.0 * es.eta * es.eta);
        }
    }

    #[test]
    fn gap_scan_band() {
        let s = sm();
        let g = spectral_gap_scan(0.5, 5.0, &s, 200).unwrap();
        assert!(g.b_tilde >= g.b_cubic.min(10.0 / 7.0 * 0.25) - 1e-12);
        let small = spectral_gap_scan(1e-3, 1e-2, &s, 50).unwrap();
        assert!(small.b_tilde < 1e-5);
    }
}
