//! Spectral projectors of the Fourier symbol and the frequency-domain Green's
//! function G_hat(eta, t) = sum_j exp(lambda_j t) M_hat_j.
//!
//! The reactant row of the symbol is (0, 0, 0, D eta^2/v^2), so the
//! projectors split exactly: M_hat_4 = (0, 0, q, 1)^T e_4^T for every eta, and
//! for j <= 3 the (v, u, E) block is adj(lambda_j + A_3)/prod(lambda_j - lambda_k)
//! over the other two cubic roots, with column 4 equal to -q times column 3.
//! This keeps the projectors finite where lambda_4 crosses a cubic root.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use super::eigen::{eigenvalues_at, EigenSet, Regime};
use super::matrices::{CMat3, CMat4, SystemMatrices, C64};

/// Below this |eta| the matrix exponential is used instead of the mode sum.
pub const ETA_MIN: f64 = 1e-3;
/// Relative separation below which cubic roots count as coalesced.
pub const SEP_REL: f64 = 1e-4;

fn det3(m: &CMat3) -> C64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
        - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

pub fn adj3(m: &CMat3) -> CMat3 {
    let mut a = CMat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let r: Vec<usize> = (0..3).filter(|&k| k != j).collect();
            let c: Vec<usize> = (0..3).filter(|&k| k != i).collect();
            let minor = m[(r[0], c[0])] * m[(r[1], c[1])] - m[(r[0], c[1])] * m[(r[1], c[0])];
            a[(i, j)] = if (i + j) % 2 == 0 { minor } else { -minor };
        }
    }
    a
}

pub fn adj4(m: &CMat4) -> CMat4 {
    let mut a = CMat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let minor = m.remove_row(j).remove_column(i);
            let d = det3(&CMat3::from_fn(|r, c| minor[(r, c)]));
            a[(i, j)] = if (i + j) % 2 == 0 { d } else { -d };
        }
    }
    a
}

/// The exact reactant projector (0, 0, q, 1)^T e_4^T.
pub fn reactant_projector(q: f64) -> CMat4 {
    let mut m = CMat4::zeros();
    m[(2, 3)] = C64::new(q, 0.0);
    m[(3, 3)] = C64::new(1.0, 0.0);
    m
}

/// Projector built from a 3x3 block, column 4 filled as -q * column 3.
pub fn embed_block(block: &CMat3, q: f64) -> CMat4 {
    let mut m = CMat4::zeros();
    for r in 0..3 {
        for c in 0..3 {
            m[(r, c)] = block[(r, c)];
        }
        m[(r, 3)] = -block[(r, 2)] * q;
    }
    m
}

/// Block projectors for arbitrary cubic points lambda[0..3] (exact roots or
/// approximations), without any separation check.
pub fn block_projectors(eta: f64, lambdas: &[C64; 3], sm: &SystemMatrices) -> [CMat4; 3] {
    let mut out = [CMat4::zeros(); 3];
    for j in 0..3 {
        let mut den = C64::new(1.0, 0.0);
        for k in 0..3 {
            if k != j {
                den *= lambdas[j] - lambdas[k];
            }
        }
        let block = adj3(&sm.block3(eta, lambdas[j])) / den;
        out[j] = embed_block(&block, sm.heat_q);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub eta: f64,
    pub m_hat: [CMat4; 4],
    /// true when the cubic roots are too close for the adjugate formula; only
    /// M_hat_4 is filled in that case
    pub degenerate: bool,
    pub min_separation: f64,
}

impl ModeSet {
    pub fn sum(&self) -> CMat4 {
        self.m_hat.iter().fold(CMat4::zeros(), |acc, m| acc + m)
    }
}

pub fn min_cubic_separation(es: &EigenSet) -> f64 {
    let r = es.cubic_roots();
    (r[0] - r[1]).norm().min((r[0] - r[2]).norm()).min((r[1] - r[2]).norm())
}

pub fn mode_matrices(es: &EigenSet, sm: &SystemMatrices) -> ModeSet {
    let sep = min_cubic_separation(es);
    let sep_min = SEP_REL * es.magnitude();
    let mut m_hat = [CMat4::zeros(); 4];
    m_hat[3] = reactant_projector(sm.heat_q);
    let degenerate = es.regime == Regime::Zero || sep < sep_min;
    if !degenerate {
        let b = block_projectors(es.eta, &es.cubic_roots(), sm);
        m_hat[..3].copy_from_slice(&b);
    }
    ModeSet { eta: es.eta, m_hat, degenerate, min_separation: sep }
}

/// adj(lambda_j I + A)/prod_{k != j}(lambda_j - lambda_k) over all four roots.
/// Independent of the block split; singular wherever lambda_4 meets a cubic root.
pub fn full_adjugate_modes(es: &EigenSet, sm: &SystemMatrices) -> [CMat4; 4] {
    let sym = sm.symbol(es.eta);
    let mut out = [CMat4::zeros(); 4];
    for j in 0..4 {
        let mut den = C64::new(1.0, 0.0);
        for k in 0..4 {
            if k != j {
                den *= es.lambdas[j] - es.lambdas[k];
            }
        }
        let shifted = sym + CMat4::identity() * es.lambdas[j];
        out[j] = adj4(&shifted) / den;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreensPath {
    ModeSum,
    MatrixExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensFrequencySlice {
    pub eta: f64,
    pub t: f64,
    pub g: CMat4,
    pub path: GreensPath,
}

pub fn greens_expm(eta: f64, t: f64, sm: &SystemMatrices) -> CMat4 {
    (sm.generator(eta) * C64::new(t, 0.0)).exp()
}

pub fn greens_mode_sum(modes: &ModeSet, lambdas: &[C64; 4], t: f64) -> CMat4 {
    let mut g = CMat4::zeros();
    for j in 0..4 {
        g += modes.m_hat[j] * (lambdas[j] * t).exp();
    }
    g
}

pub fn greens_fourier(eta: f64, t: f64, sm: &SystemMatrices) -> GreensFrequencySlice {
    assert!(t >= 0.0, "greens_fourier needs t >= 0");
    if t == 0.0 || eta == 0.0 {
        return GreensFrequencySlice { eta, t, g: CMat4::identity(), path: GreensPath::ModeSum };
    }
    if eta.abs() >= ETA_MIN {
        if let Ok(es) = eigenvalues_at(eta, sm) {
            let modes = mode_matrices(&es, sm);
            if !modes.degenerate {
                let g = greens_mode_sum(&modes, &es.lambdas, t);
                return GreensFrequencySlice { eta, t, g, path: GreensPath::ModeSum };
            }
        }
    }
    GreensFrequencySlice { eta, t, g: greens_expm(eta, t, sm), path: GreensPath::MatrixExponential }
}

pub fn max_entry_diff(a: &CMat4, b: &CMat4) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn real_part(m: &CMat4) -> Matrix4<f64> {
    m.map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_parameters, equilibrium, linearize};
    use crate::spectral::matrices::assemble_linearization;

    fn sm() -> SystemMatrices {
        let p = default_parameters();
        assemble_linearization(&equilibrium(&p), &p)
    }

    #[test]
    fn completeness_and_projector_identities() {
        let p = default_parameters();
        let lp = linearize(&p, (1.05, 0.1, 1.1, 0.05)).unwrap();
        let s = assemble_linearization(&lp, &p);
        for &eta in &[0.01, 0.3, 0.9, 3.0, 17.0] {
            let es = eigenvalues_at(eta, &s).unwrap();
            let ms = mode_matrices(&es, &s);
            assert!(!ms.degenerate);
            assert!(max_entry_diff(&ms.sum(), &CMat4::identity()) < 1e-9, "eta {eta}");
            for j in 0..4 {
                for k in 0..4 {
                    let prod = ms.m_hat[j] * ms.m_hat[k];
                    let want = if j == k { ms.m_hat[j] } else { CMat4::zeros() };
                    let scale = ms.m_hat[j].camax().max(1.0) * ms.m_hat[k].camax().max(1.0);
                    assert!(max_entry_diff(&prod, &want) < 1e-8 * scale, "eta {eta} ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn block_projectors_match_full_adjugate() {
        let s = sm();
        let es = eigenvalues_at(3.0, &s).unwrap();
        let ms = mode_matrices(&es, &s);
        let full = full_adjugate_modes(&es, &s);
        for j in 0..4 {
            assert!(max_entry_diff(&ms.m_hat[j], &full[j]) < 1e-10, "mode {j}");
        }
    }

    /// Right eigenvectors from a dense eigen-solve give an independent projector.
    #[test]
    fn first_projector_against_eigendecomposition() {
        let s = sm();
        let eta = 3.0;
        let es = eigenvalues_at(eta, &s).unwrap();
        let ms = mode_matrices(&es, &s);
        // kernel vectors of (lambda_1 I + A) and its transpose via the adjugate
        // column of largest norm, normalized so that l . r = 1
        let a = s.symbol(eta) + CMat4::identity() * es.lambdas[0];
        let adj = adj4(&a);
        let (mut best, mut col) = (0.0, 0);
        for c in 0..4 {
            let n = adj.column(c).norm();
            if n > best {
                best = n;
                col = c;
            }
        }
        let r = adj.column(col).into_owned();
        let (mut best, mut row) = (0.0, 0);
        for rr in 0..4 {
            let n = adj.row(rr).norm();
            if n > best {
                best = n;
                row = rr;
            }
        }
        let l = adj.row(row).into_owned();
        let proj = &r * &l / (l * &r)[(0, 0)];
        assert!(max_entry_diff(&proj, &ms.m_hat[0]) < 1e-8);
        assert!(max_entry_diff(&(ms.m_hat[0] * ms.m_hat[0]), &ms.m_hat[0]) < 1e-8);
    }

    #[test]
    fn reactant_projector_at_large_eta() {
        let s = sm();
        let es = eigenvalues_at(1e3, &s).unwrap();
        let ms = mode_matrices(&es, &s);
        let want = reactant_projector(0.5);
        assert_eq!(ms.m_hat[3], want);
        let full = full_adjugate_modes(&es, &s);
        assert!(max_entry_diff(&full[3], &want) < 1e-8);
    }

    #[test]
    fn trivial_greens_values() {
        let s = sm();
        assert_eq!(greens_fourier(2.0, 0.0, &s).g, CMat4::identity());
        assert_eq!(greens_fourier(0.0, 3.0, &s).g, CMat4::identity());
    }

    #[test]
    fn mode_sum_matches_exponential_on_overlap() {
        let s = sm();
        for &eta in &[1e-3, 2e-3, 5e-3, 1e-2] {
            for &t in &[0.1, 1.0, 10.0] {
                let es = eigenvalues_at(eta, &s).unwrap();
                let ms = mode_matrices(&es, &s);
                let a = greens_mode_sum(&ms, &es.lambdas, t);
                let b = greens_expm(eta, t, &s);
                assert!(max_entry_diff(&a, &b) < 1e-8, "eta {eta} t {t}: {}", max_entry_diff(&a, &b));
            }
        }
    }
}
