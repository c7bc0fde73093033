//! Linearized flux and viscosity matrices and the characteristic quartic.

use nalgebra::{Matrix3, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{GasParameters, LinearizationPoint};

pub type C64 = Complex64;
pub type CMat4 = Matrix4<C64>;
pub type CMat3 = Matrix3<C64>;

/// F'(U) and B(U) for the state ordering (v, u, E, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemMatrices {
    pub fprime: Matrix4<f64>,
    pub bmat: Matrix4<f64>,
    pub heat_q: f64,
    /// D / v^2, the diffusion rate of the reactant mode.
    pub alpha4: f64,
    /// p, p_v, p_e, mu/v, nu theta_e/v: the inputs of the closed-form cubic
    pub cubic_inputs: [f64; 5],
}

pub fn assemble_linearization(lp: &LinearizationPoint, params: &GasParameters) -> SystemMatrices {
    let (v, u, q) = (lp.v_bar, lp.u_bar, params.heat_q);
    let (p, p_v, p_e) = (lp.p, lp.p_v, lp.p_e);
    #[rustfmt::skip]
    let fprime = Matrix4::new(
        0.0,      -1.0,               0.0,      0.0,
        p_v,      -p_e * u,           p_e,      -q * p_e,
        p_v * u,  p - p_e * u * u,    p_e * u,  -q * p_e * u,
        0.0,      0.0,                0.0,      0.0,
    );
    let heat = params.nu / (params.c_v * v);
    let visc = params.mu / v;
    let dz = params.diff / (v * v);
    #[rustfmt::skip]
    let bmat = Matrix4::new(
        0.0, 0.0,                0.0,  0.0,
        0.0, visc,               0.0,  0.0,
        0.0, (visc - heat) * u,  heat, -q * heat + q * dz,
        0.0, 0.0,                0.0,  dz,
    );
    SystemMatrices { fprime, bmat, heat_q: q, alpha4: dz, cubic_inputs: [p, p_v, p_e, visc, heat] }
}

impl SystemMatrices {
    /// i eta F' + eta^2 B, so that the Fourier generator is its negative.
    pub fn symbol(&self, eta: f64) -> CMat4 {
        let mut s = CMat4::zeros();
        for r in 0..4 {
            for c in 0..4 {
                s[(r, c)] = C64::new(eta * eta * self.bmat[(r, c)], eta * self.fprime[(r, c)]);
            }
        }
        s
    }

    /// Generator -i eta F' - eta^2 B of the Fourier-side ODE.
    pub fn generator(&self, eta: f64) -> CMat4 {
        -self.symbol(eta)
    }

    /// Upper-left 3x3 block of lambda I + symbol(eta): the (v, u, E) subsystem.
    pub fn block3(&self, eta: f64, lambda: C64) -> CMat3 {
        let s = self.symbol(eta);
        let mut m = s.fixed_view::<3, 3>(0, 0).into_owned();
        for i in 0..3 {
            m[(i, i)] += lambda;
        }
        m
    }

    /// The exact reactant-mode eigenvalue -D eta^2 / v^2.
    pub fn lambda4(&self, eta: f64) -> f64 {
        -self.alpha4 * eta * eta
    }
}

/// Coefficients of det(lambda I + M) in ascending order, via Faddeev-LeVerrier.
fn char_coeffs<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> Vec<C64> {
    // det(lambda I + M) = det(lambda I - X) with X = -M
    let x = -m;
    let mut coeffs = vec![C64::new(0.0, 0.0); N + 1];
    coeffs[N] = C64::new(1.0, 0.0);
    let mut mk = nalgebra::SMatrix::<C64, N, N>::identity();
    for k in 1..=N {
        let xm = x * mk;
        let c = -xm.trace() / k as f64;
        coeffs[N - k] = c;
        mk = xm + nalgebra::SMatrix::<C64, N, N>::identity() * c;
    }
    coeffs
}

/// Degree-4 characteristic polynomial of the symbol in factored form: the
/// exact reactant factor (lambda + D eta^2 / v^2) times the closed-form
/// (v, u, E) cubic. The generic expansion of det(lambda I + symbol) is kept
/// alongside as a cross-check.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPoly {
    pub eta: f64,
    /// c0..c4 of the factored product, ascending, c4 = 1
    pub quartic: [C64; 5],
    /// b0..b3 of det(lambda I + block3), ascending
    pub cubic: [C64; 4],
    /// root of the linear factor, -D eta^2 / v^2
    pub linear_root: f64,
    /// c0..c4 of det(lambda I + symbol) by Faddeev-LeVerrier
    pub expanded: [C64; 5],
}

pub fn characteristic_poly(eta: f64, sm: &SystemMatrices) -> CharPoly {
    // scale the symbol to O(1) entries before Faddeev-LeVerrier, undo afterwards
    let s = (eta * eta).max(eta.abs()).max(1.0);
    let sym = sm.symbol(eta) / C64::new(s, 0.0);
    let mut q = char_coeffs(&sym);
    for (k, c) in q.iter_mut().enumerate() {
        *c *= s.powi(4 - k as i32);
    }
    let [p, p_v, p_e, visc, heat] = sm.cubic_inputs;
    let b = closed_form_cubic(eta * eta, p, p_v, p_e, visc, heat).map(|x| C64::new(x, 0.0));
    let r = C64::new(sm.lambda4(eta), 0.0);
    let quartic = [-r * b[0], b[0] - r * b[1], b[1] - r * b[2], b[2] - r * b[3], b[3]];
    CharPoly {
        eta,
        quartic,
        cubic: b,
        linear_root: r.re,
        expanded: [q[0], q[1], q[2], q[3], q[4]],
    }
}

pub fn horner(coeffs: &[C64], x: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

pub fn horner_derivative(coeffs: &[C64], x: C64) -> C64 {
    let n = coeffs.len();
    let mut acc = C64::new(0.0, 0.0);
    for k in (1..n).rev() {
        acc = acc * x + coeffs[k] * k as f64;
    }
    acc
}

/// Sum of |c_k| |x|^k, the natural magnitude against which residuals are judged.
pub fn poly_scale(coeffs: &[C64], x: C64) -> f64 {
    let ax = x.norm();
    coeffs.iter().rev().fold(0.0, |acc, c| acc * ax + c.norm())
}

impl CharPoly {
    pub fn eval(&self, lambda: C64) -> C64 {
        horner(&self.quartic, lambda)
    }

    pub fn scale(&self, lambda: C64) -> f64 {
        poly_scale(&self.quartic, lambda).max(f64::MIN_POSITIVE)
    }

    /// Coefficient mismatch between the expanded determinant and the
    /// factored product, relative to the largest coefficient.
    pub fn factorization_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..5 {
            worst = worst.max((self.expanded[k] - self.quartic[k]).norm());
            scale = scale.max(self.quartic[k].norm()).max(self.expanded[k].norm());
        }
        worst / scale.max(f64::MIN_POSITIVE)
    }
}

/// Real cubic det(lambda I + block3) written out in closed form:
/// lambda eta^2 p p_e + (lambda (lambda + eta^2 mu/v) - eta^2 p_v)(lambda + eta^2 nu theta_e / v).
/// Returns b0..b3 ascending. Generic so it can run in extended precision.
pub fn closed_form_cubic<T>(eta2: T, p: T, p_v: T, p_e: T, visc: T, heat: T) -> [T; 4]
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<Output = T> + From<f64>,
{
    let one = T::from(1.0);
    let zero = T::from(0.0);
    let b2 = eta2 * (visc + heat);
    let b1 = eta2 * eta2 * visc * heat + eta2 * (p * p_e - p_v);
    let b0 = zero - eta2 * eta2 * p_v * heat;
    [b0, b1, b2, one]
}
