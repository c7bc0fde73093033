//! Analytic high-frequency approximations of the eigenvalues and projectors.
//!
//!   lambda_j* = -alpha_j* eta^2 + beta_j* + sum_{k=1..3} A_{j,k} / (1 + eta^2)^k - K_j / (1 + eta^2)^4
//!
//! for j = 1, 2, 3 (alpha_1* = 0) and lambda_4* = lambda_4. The coefficient
//! formulas are generic over the scalar type so the O(eta^-8) remainder can be
//! measured in double-double arithmetic, where f64 cancellation would swamp it.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};
use qd::Quad;

use super::eigen::{eigenvalues_at, Regime};
use super::matrices::{closed_form_cubic, CMat4, SystemMatrices, C64};
use super::modes::{adj4, block_projectors, reactant_projector};
use crate::error::{Error, Result};
use crate::params::{GasParameters, LinearizationPoint};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + From<f64>
{
}

impl<T> Scalar for T where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T> + Neg<Output = T> + From<f64>
{
}

fn pw<T: Scalar>(x: T, k: u32) -> T {
    let mut r = T::from(1.0);
    for _ in 0..k {
        r = r * x;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxCoeffs<T> {
    /// alpha_1*..alpha_4*, alpha_1* = 0 and alpha_4* = D/v^2
    pub alpha: [T; 4],
    pub beta: [T; 3],
    /// a[j][k] = A_{j+1, k+1}
    pub a: [[T; 3]; 3],
}

/// Inputs of the coefficient formulas, promoted to the working scalar.
#[derive(Debug, Clone, Copy)]
pub struct StateScalars<T> {
    pub p: T,
    pub pv: T,
    pub pe: T,
    pub te: T,
    pub v: T,
    pub mu: T,
    pub nu: T,
    pub dz: T,
}

impl<T: Scalar> StateScalars<T> {
    /// Pressure derivatives are rebuilt from a, c_v, v and theta in the working
    /// precision. The coefficient formulas rely on p_v = -p/v, p_e = a/(c_v v)
    /// and theta_e = 1/c_v holding exactly; f64-rounded copies of them leave an
    /// O(1e-16) inconsistency that dominates the eta^-8 remainder.
    pub fn new(lp: &LinearizationPoint, params: &GasParameters) -> Self {
        let a = T::from(params.a);
        let c_v = T::from(params.c_v);
        let v = T::from(lp.v_bar);
        let p = a * T::from(lp.theta_bar) / v;
        StateScalars {
            p,
            pv: -p / v,
            pe: a / (c_v * v),
            te: T::from(1.0) / c_v,
            v,
            mu: T::from(params.mu),
            nu: T::from(params.nu),
            dz: T::from(params.diff) / (v * v),
        }
    }
}

pub fn approx_coeffs<T: Scalar>(s: &StateScalars<T>) -> ApproxCoeffs<T> {
    let StateScalars { p, pv, pe, te, v, mu: m, nu: n, dz } = *s;
    let c = |x: f64| T::from(x);
    let v2 = v * v;
    let v3 = v2 * v;
    let v4 = v2 * v2;
    let nt = n * te;

    let a11 = -v3 * (nt * pv * pv + m * p * pe * pv) / (n * pw(m, 3) * te);
    let a12 = v3
        * (m * m * p * p * v2 * pe * pe * pv + c(2.0) * n * n * v2 * te * te * pw(pv, 3)
            + c(3.0) * n * m * p * v2 * te * pe * pv * pv
            + m * m * p * v2 * pe * pv * pv
            - n * n * m * m * te * te * pv * pv
            - n * pw(m, 3) * p * te * pe * pv)
        / (n * n * pw(m, 5) * te * te);
    let den13 = pw(n, 3) * pw(m, 7) * pw(te, 3);
    let a13 = -(v3
        * pv
        * (pw(m, 3) * pw(p, 3) * v4 * pw(pe, 3)
            + m * m * p * p * v2 * pe * pe * (c(3.0) * v2 * pv * (c(2.0) * nt + m) - c(2.0) * n * m * m * te)
            + pw(nt, 3) * pv * (pw(m, 4) + c(5.0) * v4 * pv * pv - c(4.0) * m * m * v2 * pv)))
        / den13
        - (v3
            * pv
            * (m * p
                * pe
                * (n * n * pw(m, 4) * te * te + v4 * pv * pv * (c(10.0) * nt * nt + c(4.0) * n * m * te + m * m)
                    - c(2.0) * n * m * m * v2 * te * pv * (c(3.0) * nt + m))))
            / den13;

    let d = m - nt;
    let a21 = v3 * (pw(m, 3) * p * p * pe * pe - m * p * pe * pv * (nt * nt - c(3.0) * n * m * te + c(2.0) * m * m)
        + pv * pv * pw(d, 3))
        / (pw(m, 3) * pw(d, 3));
    let lead22 = v3 * (m * p * pe + pv * (nt - m));
    let a22 = lead22
        * (c(2.0) * pw(m, 4) * p * p * v2 * pe * pe
            + m * p * pe * d * (pw(m, 3) * d - v2 * pv * pw(nt - c(2.0) * m, 2)))
        / (pw(m, 5) * pw(d, 5))
        + lead22 * (pv * (c(2.0) * v2 * pv - m * m) * pw(d, 4)) / (pw(m, 5) * pw(d, 5));
    let den23 = pw(m, 7) * pw(d, 7);
    let a23 = (v3
        * (c(5.0) * pw(m, 7) * pw(p, 4) * v4 * pw(pe, 4)
            + pw(m, 3)
                * pw(p, 3)
                * v2
                * pw(pe, 3)
                * d
                * (c(4.0) * pw(m, 4) * d
                    + v2 * pv
                        * (pw(nt, 3) - c(6.0) * n * n * m * te * te + c(15.0) * n * m * m * te - c(20.0) * pw(m, 3))))
        + v3 * m * m * p * p * pe * pe * d * d
            * (pw(m, 5) * d * d
                + c(3.0) * v4 * pv * pv
                    * (c(-2.0) * pw(nt, 3) + c(9.0) * n * n * m * te * te - c(15.0) * n * m * m * te + c(10.0) * pw(m, 3)))
        - v3 * m * m * p * p * pe * pe * d * d * c(2.0) * m * m * v2 * pv
            * (-pw(nt, 3) + c(5.0) * n * n * m * te * te - c(10.0) * n * m * m * te + c(6.0) * pw(m, 3))
        - v3 * m * p * pe * pv * pw(d, 3)
            * (pw(m, 4) * d * d * (c(2.0) * m - nt)
                + v4 * pv * pv
                    * (c(-10.0) * pw(nt, 3) + c(36.0) * n * n * m * te * te - c(45.0) * n * m * m * te + c(20.0) * pw(m, 3)))
        - v3 * m * p * pe * pv * pw(d, 3)
            * (c(2.0) * m * m * v2 * pv
                * (c(3.0) * pw(nt, 3) - c(11.0) * n * n * m * te * te + c(14.0) * n * m * m * te - c(6.0) * pw(m, 3)))
        + v3 * pv * pv * (pw(m, 4) + c(5.0) * v4 * pv * pv - c(4.0) * m * m * v2 * pv) * pw(d, 7))
        / den23;

    let e = nt - m;
    let a31 = p * v3 * pe * (n * p * te * pe + pv * e) / (nt * pw(e, 3));
    let den32 = n * n * te * te * pw(e, 5);
    let a32 = p * v3 * pe
        * (c(2.0) * n * n * p * p * v2 * te * te * pe * pe
            + p * pe * d * (n * n * te * te * d + v2 * pv * (m - c(4.0) * nt)))
        / den32
        + p * v3 * pe * (pv * d * d * (nt * e + v2 * pv)) / den32;
    let den33 = pw(nt, 3) * pw(e, 7);
    let a33 = (p * v3 * pe
        * (c(5.0) * pw(n, 3) * pw(p, 3) * v4 * pw(te, 3) * pw(pe, 3)
            - p * p * v2 * pe * pe * d
                * (c(4.0) * pw(nt, 3) * e + v2 * pv * (c(15.0) * nt * nt - c(6.0) * n * m * te + m * m)))
        + p * v3 * pe * p * pe * d * d
            * (pw(nt, 3) * d * d - c(3.0) * v4 * pv * pv * (m - c(3.0) * nt)
                + c(2.0) * n * v2 * te * pv * (c(4.0) * nt * nt - c(5.0) * n * m * te + m * m))
        + p * v3 * pe * (-pv * pw(d, 3) * pw(nt * e + v2 * pv, 2)))
        / den33;

    let beta1 = v * pv / m;
    let beta2 = v * (m * p * pe + nt * pv - m * pv) / (m * (m - nt));
    let beta3 = p * v * pe / (nt - m);
    ApproxCoeffs {
        alpha: [c(0.0), m / v, nt / v, dz],
        beta: [beta1, beta2, beta3],
        a: [[a11, a12, a13], [a21, a22, a23], [a31, a32, a33]],
    }
}

/// lambda_1*..lambda_3* at real eta.
pub fn approx_lambda<T: Scalar>(coeffs: &ApproxCoeffs<T>, ks: [f64; 3], eta: T) -> [T; 3] {
    let one = T::from(1.0);
    let w = one / (one + eta * eta);
    let mut out = [T::from(0.0); 3];
    for j in 0..3 {
        let a = coeffs.a[j];
        let tail = w * (a[0] + w * (a[1] + w * (a[2] - T::from(ks[j]) * w)));
        out[j] = -coeffs.alpha[j] * eta * eta + coeffs.beta[j] + tail;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxEigenSet {
    pub eta: f64,
    /// lambda_1*..lambda_4*, real on the real axis
    pub lambdas_star: [f64; 4],
    pub coeffs: ApproxCoeffs<f64>,
    pub ks: [f64; 3],
}

impl ApproxEigenSet {
    pub fn complex(&self) -> [C64; 4] {
        self.lambdas_star.map(|l| C64::new(l, 0.0))
    }
}

pub fn approx_eigenvalues(eta: f64, lp: &LinearizationPoint, params: &GasParameters, ks: [f64; 3]) -> ApproxEigenSet {
    let coeffs = approx_coeffs(&StateScalars::<f64>::new(lp, params));
    let l = approx_lambda(&coeffs, ks, eta);
    let l4 = -coeffs.alpha[3] * eta * eta;
    ApproxEigenSet { eta, lambdas_star: [l[0], l[1], l[2], l4], coeffs, ks }
}

/// |lambda_j*(eta) - lambda_j(eta)| * eta^8 for j = 1..3, with both sides in
/// double-double. Needs the all-real regime, so eta should be large (>= 10 at
/// the defaults).
pub fn scaled_approx_error(eta: f64, lp: &LinearizationPoint, params: &GasParameters, ks: [f64; 3]) -> Result<[f64; 3]> {
    let sm = super::matrices::assemble_linearization(lp, params);
    let es = eigenvalues_at(eta, &sm)?;
    if es.regime != Regime::Real {
        return Err(Error::InvalidParameter(format!("eta = {eta} is not in the all-real regime")));
    }
    let s = StateScalars::<Quad>::new(lp, params);
    let e = Quad::from(eta);
    let e2 = e * e;
    let visc = s.mu / s.v;
    let heat = s.nu * s.te / s.v;
    let b = closed_form_cubic(e2, s.p, s.pv, s.pe, visc, heat);
    let eval = |x: Quad| ((x + b[2]) * x + b[1]) * x + b[0];
    let deriv = |x: Quad| (Quad::from(3.0) * x + Quad::from(2.0) * b[2]) * x + b[1];
    let coeffs = approx_coeffs(&s);
    let star = approx_lambda(&coeffs, ks, e);
    let e8 = e2 * e2 * e2 * e2;
    let mut out = [0.0; 3];
    for j in 0..3 {
        let mut x = Quad::from(es.lambdas[j].re);
        for _ in 0..4 {
            x = x - eval(x) / deriv(x);
        }
        let d = (star[j] - x) * e8;
        out[j] = (d.0 + d.1).abs();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KChoice {
    pub ks: [f64; 3],
    /// min over the probe of -Re lambda_j*
    pub sigma0_star: f64,
    /// min over the probe of the pairwise real-part gaps
    pub sigma1_star: f64,
    pub probe: Vec<f64>,
    /// comparisons with lambda_4* are made only for eta >= eta_lo
    pub eta_lo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KSearch {
    pub k_max: f64,
    pub step: f64,
    pub margin: f64,
    pub eta_lo: f64,
    pub probe_max: f64,
    pub probe_points: usize,
}

impl Default for KSearch {
    fn default() -> Self {
        KSearch { k_max: 100.0, step: 0.5, margin: 1e-3, eta_lo: 1.0, probe_max: 1e3, probe_points: 400 }
    }
}

impl KSearch {
    pub fn probe(&self) -> Vec<f64> {
        let mut g = vec![0.0];
        g.extend(super::eigen::logspace(1e-2, self.probe_max, self.probe_points - 1));
        g
    }
}

struct Probe {
    eta: Vec<f64>,
    /// lambda_j* without the K term, per point
    base: Vec<[f64; 3]>,
    w4: Vec<f64>,
    l4: Vec<f64>,
    far: Vec<bool>,
}

impl Probe {
    fn new(coeffs: &ApproxCoeffs<f64>, search: &KSearch) -> Self {
        let eta = search.probe();
        let base = eta.iter().map(|&e| approx_lambda(coeffs, [0.0; 3], e)).collect();
        let w4 = eta.iter().map(|&e| (1.0 + e * e).powi(-4)).collect();
        let l4 = eta.iter().map(|&e| -coeffs.alpha[3] * e * e).collect();
        let far = eta.iter().map(|&e| e >= search.eta_lo).collect();
        Probe { eta, base, w4, l4, far }
    }

    fn lam(&self, i: usize, j: usize, k: f64) -> f64 {
        self.base[i][j] - k * self.w4[i]
    }
}

/// Constraints involving lambda_j* only (and the already fixed lower indices).
fn stage_ok(pr: &Probe, ks: &[f64], j: usize, margin: f64) -> bool {
    (0..pr.eta.len()).all(|i| {
        let lj = pr.lam(i, j, ks[j]);
        if !(lj < -margin) {
            return false;
        }
        if j > 0 && !(pr.lam(i, j - 1, ks[j - 1]) - lj >= margin) {
            return false;
        }
        if pr.far[i] {
            match j {
                1 => lj - pr.l4[i] >= margin,
                2 => pr.l4[i] - lj >= margin,
                _ => true,
            }
        } else {
            true
        }
    })
}

/// Smallest K triple in lexicographic order, K_1 < K_2 < K_3 on the search
/// lattice, satisfying negativity and the ordering 1 > 2 > 4 > 3 on the probe.
pub fn choose_k(lp: &LinearizationPoint, params: &GasParameters, search: &KSearch) -> Result<KChoice> {
    let coeffs = approx_coeffs(&StateScalars::<f64>::new(lp, params));
    let pr = Probe::new(&coeffs, search);
    let n = (search.k_max / search.step).round() as usize;
    let lattice: Vec<f64> = (0..=n).map(|i| i as f64 * search.step).collect();
    for (i1, &k1) in lattice.iter().enumerate() {
        if !stage_ok(&pr, &[k1], 0, search.margin) {
            continue;
        }
        for (i2, &k2) in lattice.iter().enumerate().skip(i1 + 1) {
            if !stage_ok(&pr, &[k1, k2], 1, search.margin) {
                continue;
            }
            for &k3 in lattice.iter().skip(i2 + 1) {
                let ks = [k1, k2, k3];
                if stage_ok(&pr, &ks, 2, search.margin) {
                    let (sigma0_star, sigma1_star) = probe_gaps(&pr, ks);
                    return Ok(KChoice { ks, sigma0_star, sigma1_star, probe: pr.eta.clone(), eta_lo: search.eta_lo });
                }
            }
        }
    }
    Err(Error::NoFeasibleK)
}

fn probe_gaps(pr: &Probe, ks: [f64; 3]) -> (f64, f64) {
    let mut s0 = f64::INFINITY;
    let mut s1 = f64::INFINITY;
    for i in 0..pr.eta.len() {
        let mut vals: Vec<f64> = (0..3).map(|j| pr.lam(i, j, ks[j])).collect();
        if pr.far[i] {
            vals.push(pr.l4[i]);
        }
        for (a, &x) in vals.iter().enumerate() {
            s0 = s0.min(-x);
            for &y in &vals[a + 1..] {
                s1 = s1.min((x - y).abs());
            }
        }
    }
    (s0, s1)
}

/// Checks the ordering 0 > 1 > 2 > 4 > 3 for given K on the probe, as used
/// by the search. Exposed so callers can test monotone feasibility.
pub fn ordering_holds(lp: &LinearizationPoint, params: &GasParameters, search: &KSearch, ks: [f64; 3]) -> bool {
    let coeffs = approx_coeffs(&StateScalars::<f64>::new(lp, params));
    let pr = Probe::new(&coeffs, search);
    ks[0] < ks[1] && ks[1] < ks[2] && (0..3).all(|j| stage_ok(&pr, &ks, j, search.margin))
}

/// Projectors evaluated at the approximate eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularModes {
    pub eta: f64,
    /// block construction at lambda_1*..lambda_3*, plus the exact reactant projector
    pub m_star: [CMat4; 4],
    /// adj(lambda_j* I + A) / prod_{k != j, k <= 4}(lambda_j* - lambda_k*), j = 1..3
    pub raw: [CMat4; 3],
}

impl SingularModes {
    /// max over k <= 3 of |(M_j*)_{k4} + q (M_j*)_{k3}| for the raw adjugate form.
    pub fn column4_residual(&self, q: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for j in 0..3 {
            out[j] = (0..3)
                .map(|k| (self.raw[j][(k, 3)] + self.raw[j][(k, 2)] * q).norm())
                .fold(0.0, f64::max);
        }
        out
    }
}

pub fn singular_mode_matrices(eta: f64, ae: &ApproxEigenSet, sm: &SystemMatrices) -> SingularModes {
    let l = ae.complex();
    let b = block_projectors(eta, &[l[0], l[1], l[2]], sm);
    let sym = sm.symbol(eta);
    let mut raw = [CMat4::zeros(); 3];
    for j in 0..3 {
        let mut den = C64::new(1.0, 0.0);
        for k in 0..4 {
            if k != j {
                den *= l[j] - l[k];
            }
        }
        raw[j] = adj4(&(sym + CMat4::identity() * l[j])) / den;
    }
    SingularModes { eta, m_star: [b[0], b[1], b[2], reactant_projector(sm.heat_q)], raw }
}

/// M_j^{*,0..4} for j = 1, 2, real matrices; the expansion reads
/// M0 + i M1/eta + M2/eta^2 + i M3/eta^3 + M4/eta^4.
#[rustfmt::skip]
pub fn expansion_tables(lp: &LinearizationPoint, params: &GasParameters) -> [[Matrix4<f64>; 5]; 2] {
    let (p, pv, pe, te) = (lp.p, lp.p_v, lp.p_e, lp.theta_e);
    let (u, v, q, m, n) = (lp.u_bar, lp.v_bar, params.heat_q, params.mu, params.nu);
    let (v2, v3, v4) = (v * v, v * v * v, v * v * v * v);
    let nt = n * te;
    let z = 0.0;

    let mut a = [Matrix4::<f64>::zeros(); 5];
    a[0][(0, 0)] = 1.0;
    {
        a[1] = Matrix4::new(
            z,              v / m,  z,  z,
            -v * pv / m,    z,      z,  z,
            -u * v * pv / m, z,     z,  z,
            z, z, z, z,
        );
        let r = v2 * pe / (n * m * te);
        a[2] = Matrix4::new(
            -v2 * pv / (m * m),             -u * r,                 r,  -q * r,
            z,                              v2 * pv / (m * m),      z,  z,
            -p * v2 * pv / (n * m * te),    u * v2 * pv / (m * m),  z,  z,
            z, z, z, z,
        );
        let s = p * m * pe + 2.0 * nt * pv;
        let g = v3 * pe * pv / (n * m * m * te);
        a[3] = Matrix4::new(
            z,                                      -v3 * s / (n * m.powi(3) * te),                 z,          z,
            v3 * pv * s / (n * m.powi(3) * te),     u * g,                                          -g,         q * g,
            u * v3 * pv * s / (n * m.powi(3) * te), -v3 * (p * pv - u * u * pe * pv) / (n * m * m * te), -u * g, q * u * g,
            z, z, z, z,
        );
        let w = p * m * pe + m * pv + 2.0 * nt * pv;
        let d2 = n * n * m.powi(3) * te * te;
        a[4] = Matrix4::new(
            v4 * (p * pe * pv * m * m + 2.0 * p * n * pe * pv * te * m + 3.0 * nt * nt * pv * pv) / (n * n * m.powi(4) * te * te),
            u * v4 * pe * w / d2,
            -v4 * pe * w / d2,
            q * v4 * pe * w / d2,

            z,
            (-2.0 * p * m * pe * pv * v4 - 3.0 * n * pv * pv * te * v4) / (n * m.powi(4) * te),
            z,
            z,

            p * v4 * pv * w / d2,
            v4 * (p * u * pe * pv * m * m - 2.0 * p * u * n * pe * pv * te * m - 3.0 * u * nt * nt * pv * pv) / (n * n * m.powi(4) * te * te),
            -p * v4 * pe * pv / (n * n * m * m * te * te),
            q * p * v4 * pe * pv / (n * n * m * m * te * te),

            z, z, z, z,
        );
    }

    let d = m - nt;
    let mut b = [Matrix4::<f64>::zeros(); 5];
    b[0][(1, 1)] = 1.0;
    b[0][(2, 1)] = u;
    {
        b[1] = Matrix4::new(
            z,                  -v / m,                     z,                  z,
            v * pv / m,         -u * v * pe / d,            v * pe / d,         -q * v * pe / d,
            u * v * pv / m,     v * (p - u * u * pe) / d,   u * v * pe / d,     -q * u * v * pe / d,
            z, z, z, z,
        );
        let md = m * m - nt * m;
        b[2] = Matrix4::new(
            v2 * pv / (m * m),      -u * v2 * pe / md,                                          v2 * pe / md,           -q * v2 * pe / md,
            z,                      v2 * (p * m * m * pe - pv * d * d) / (m * m * d * d),       z,                      z,
            -p * v2 * pv / md,      u * v2 * (2.0 * p * m * m * pe - pv * d * d) / (m * m * d * d), -p * v2 * pe / (d * d), q * p * v2 * pe / (d * d),
            z, z, z, z,
        );
        let g = 2.0 * pv + p * m * pe * (nt - 2.0 * m) / (d * d);
        let h = (2.0 * p * m * m * pe - pv * (2.0 * m * m - 3.0 * nt * m + nt * nt)) / (m * m * d.powi(3));
        b[3] = Matrix4::new(
            z,                      v3 * g / m.powi(3),                 z,                  z,
            -v3 * pv * g / m.powi(3), -u * v3 * pe * h,                 v3 * pe * h,        -q * v3 * pe * h,
            -u * v3 * pv * (2.0 * pv * d * d + p * m * pe * (nt - 2.0 * m)) / (m.powi(3) * d * d),
                                    v3 * (p - u * u * pe) * h,          u * v3 * pe * h,    -q * u * v3 * pe * h,
            z, z, z, z,
        );
        let k1 = (p * m * pe * (3.0 * m - nt) + pv * (-3.0 * m * m + 5.0 * nt * m - 2.0 * nt * nt)) / (m.powi(3) * d.powi(3));
        let kk = (pv * (3.0 * m * m - 4.0 * nt * m + nt * nt) - 3.0 * p * m * m * pe) / (m * m * d.powi(4));
        b[4] = Matrix4::new(
            v4 * pv * (p * m * pe * (3.0 * m - 2.0 * nt) / (d * d) - 3.0 * pv) / m.powi(4),
            -u * v4 * pe * k1,
            v4 * pe * k1,
            -q * v4 * pe * k1,

            z,
            v4 * (3.0 * p * p * pe * pe * m.powi(4)
                + 2.0 * p * pe * pv * (-3.0 * m.powi(3) + 6.0 * nt * m * m - 4.0 * nt * nt * m + nt.powi(3)) * m
                + 3.0 * pv * pv * d.powi(4)) / (m.powi(4) * d.powi(4)),
            z,
            z,

            -p * v4 * pv * k1,
            u * v4 * (6.0 * p * p * pe * pe * m.powi(4)
                + p * pe * pv * (-9.0 * m.powi(3) + 16.0 * nt * m * m - 9.0 * nt * nt * m + 2.0 * nt.powi(3)) * m
                + 3.0 * pv * pv * d.powi(4)) / (m.powi(4) * d.powi(4)),
            p * v4 * pe * kk,
            -q * p * v4 * pe * kk,

            z, z, z, z,
        );
    }
    [a, b]
}

/// Truncated expansion M0 + i M1/eta + M2/eta^2 + i M3/eta^3 + M4/eta^4.
pub fn truncated_expansion(tables: &[Matrix4<f64>; 5], eta: f64) -> CMat4 {
    let mut out = CMat4::zeros();
    for (k, t) in tables.iter().enumerate() {
        let w = eta.powi(-(k as i32));
        let f = if k % 2 == 1 { C64::new(0.0, w) } else { C64::new(w, 0.0) };
        out += t.map(|x| C64::new(x, 0.0)) * f;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_parameters, equilibrium, linearize};
    use crate::spectral::matrices::assemble_linearization;
    use crate::spectral::modes::max_entry_diff;

    #[test]
    fn frozen_default_coefficients() {
        // Laurent coefficients of the large-eta branches, obtained once by
        // series reversion of the cubic in exact rational arithmetic
        let p = default_parameters();
        let c = approx_coeffs(&StateScalars::<f64>::new(&equilibrium(&p), &p));
        let want = [
            [-0.128, -0.21376, -0.3722752],
            [0.1344, 0.223488, 0.3856896],
            [-0.0064, -0.009728, -0.0134144],
        ];
        for j in 0..3 {
            for k in 0..3 {
                assert!((c.a[j][k] - want[j][k]).abs() < 1e-13, "A_{},{}", j + 1, k + 1);
            }
        }
        assert!((c.beta[0] + 0.4).abs() < 1e-15);
        assert!((c.beta[1] - 0.24).abs() < 1e-15);
        assert!((c.beta[2] - 0.16).abs() < 1e-15);
        // direct evaluation of the beta_2* expression
        let lp = equilibrium(&p);
        let direct = lp.v_bar * (p.mu * lp.p * lp.p_e + p.nu * lp.theta_e * lp.p_v - p.mu * lp.p_v)
            / (p.mu * (p.mu - p.nu * lp.theta_e));
        assert_eq!(c.beta[1], direct);
    }

    #[test]
    fn double_double_and_f64_coefficients_agree() {
        let p = default_parameters();
        let lp = linearize(&p, (1.1, 0.2, 1.3, 0.1)).unwrap();
        let a = approx_coeffs(&StateScalars::<f64>::new(&lp, &p));
        let b = approx_coeffs(&StateScalars::<Quad>::new(&lp, &p));
        for j in 0..3 {
            for k in 0..3 {
                let x = b.a[j][k].0;
                assert!((a.a[j][k] - x).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }

    /// Remainder behaves like eta^-8: the scaled error settles instead of
    /// growing. A wrong A_{j,3} would leave an eta^-6 term and the scaled
    /// error would grow like eta^2. Uses c_v != 1 so every theta_e power shows.
    #[test]
    fn remainder_is_eighth_order_off_defaults() {
        let p = GasParameters::new(0.4, 1.5, 0.8, 2.0, 10.0 / 7.0, 1.0, 0.5).unwrap();
        let lp = linearize(&p, (1.1, 0.2, 1.3, 0.1)).unwrap();
        let ks = [0.0, 2.5, 3.5];
        let lo = scaled_approx_error(60.0, &lp, &p, ks).unwrap();
        let hi = scaled_approx_error(240.0, &lp, &p, ks).unwrap();
        for j in 0..3 {
            assert!(hi[j].is_finite() && lo[j].is_finite());
            let ratio = hi[j] / lo[j];
            assert!(ratio < 1.5 && ratio > 1.0 / 1.5, "branch {} ratio {ratio}", j + 1);
        }
    }

    #[test]
    fn bounded_branch_tends_to_beta1() {
        let p = default_parameters();
        let lp = equilibrium(&p);
        let ae = approx_eigenvalues(1e4, &lp, &p, [0.0, 2.5, 3.5]);
        assert!((ae.lambdas_star[0] + 0.4).abs() < 1e-8);
        assert_eq!(ae.lambdas_star[3], -10.0 / 7.0 * 1e8);
    }

    #[test]
    fn k_search_defaults() {
        let p = default_parameters();
        let lp = equilibrium(&p);
        let search = KSearch::default();
        let kc = choose_k(&lp, &p, &search).unwrap();
        assert!(kc.ks[0] < kc.ks[1] && kc.ks[1] < kc.ks[2]);
        assert!(kc.sigma0_star > 0.0 && kc.sigma1_star > 0.0);
        let doubled = kc.ks.map(|k| 2.0 * k);
        assert!(ordering_holds(&lp, &p, &search, doubled));
    }

    #[test]
    fn first_singular_projector_leading_term() {
        let p = default_parameters();
        let lp = equilibrium(&p);
        let sm = assemble_linearization(&lp, &p);
        let tables = expansion_tables(&lp, &p);
        let mut m10 = Matrix4::zeros();
        m10[(0, 0)] = 1.0;
        assert_eq!(tables[0][0], m10);
        let mut prev = f64::INFINITY;
        for &eta in &[5.0, 10.0, 20.0, 40.0] {
            let ae = approx_eigenvalues(eta, &lp, &p, [0.0, 2.5, 3.5]);
            let sing = singular_mode_matrices(eta, &ae, &sm);
            let r = sing.column4_residual(p.heat_q).iter().cloned().fold(0.0, f64::max);
            assert!(r < prev, "column-4 residual should decay, eta {eta}: {r}");
            prev = r;
        }
    }

    #[test]
    fn expansion_residual_fifth_order() {
        let p = default_parameters();
        let lp = linearize(&p, (1.1, 0.2, 1.3, 0.1)).unwrap();
        let sm = assemble_linearization(&lp, &p);
        let tables = expansion_tables(&lp, &p);
        for j in 0..2 {
            let mut scaled = Vec::new();
            for &eta in &[20.0, 40.0, 80.0] {
                let ae = approx_eigenvalues(eta, &lp, &p, [0.0, 2.5, 3.5]);
                let sing = singular_mode_matrices(eta, &ae, &sm);
                let d = max_entry_diff(&sing.m_star[j], &truncated_expansion(&tables[j], eta));
                scaled.push(d * eta.powi(5));
            }
            assert!(scaled.iter().all(|s| s.is_finite() && *s < 1e3), "branch {} {:?}", j + 1, scaled);
            assert!(scaled[2] < 2.0 * scaled[0] + 1e-6, "branch {} {:?}", j + 1, scaled);
        }
    }
}
