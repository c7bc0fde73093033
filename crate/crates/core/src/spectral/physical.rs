//! Physical-space Green's function by inverse FFT over the dual grid, and the
//! split into the singular part (built from the approximate eigenvalues) and
//! the regular remainder.
//!
//! The grid is periodic on [-L, L) with nodes x_j = -L + j dx, frequencies
//! eta_k = pi k / L. As eta -> infinity the first mode tends to
//! exp(beta_1* t) E_11 (E_11 = diag(1, 0, 0, 0)), i.e. a delta in x. That
//! limit is subtracted before the transform and reported separately.

use nalgebra::Matrix4;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::approx::{approx_eigenvalues, singular_mode_matrices, ApproxCoeffs};
use super::longwave::longwave_matrices;
use super::matrices::{assemble_linearization, CMat4, SystemMatrices, C64};
use super::modes::{greens_fourier, reactant_projector};
use crate::error::{Error, Result};
use crate::params::{GasParameters, GridSpec, LinearizationPoint};

/// Imaginary residue allowed in an inverted real kernel.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreensPhysicalSlice {
    pub t: f64,
    pub x: Vec<f64>,
    pub g: Vec<Matrix4<f64>>,
    /// the subtracted delta content is delta_rate-decaying: exp(delta_rate t) * E_11 * delta(x)
    pub delta_rate: f64,
    pub delta_coefficient: Matrix4<f64>,
    /// diffusion widths alpha_2*, alpha_3*, alpha_4 of the singular Gaussians
    pub gaussian_widths: [f64; 3],
    /// max |Im G| before it was discarded
    pub imag_residue: f64,
    /// dx * sum_x G + delta_coefficient
    pub zeroth_moment: Matrix4<f64>,
}

impl GreensPhysicalSlice {
    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn entry(&self, r: usize, c: usize) -> Vec<f64> {
        self.g.iter().map(|m| m[(r, c)]).collect()
    }
}

/// Diffusion rates that set Gaussian widths in the kernel: the long-wave
/// alpha_j and the high-frequency alpha_2*, alpha_3*, alpha_4*.
fn kernel_rates(lp: &LinearizationPoint, params: &GasParameters, coeffs: &ApproxCoeffs<f64>) -> Result<Vec<f64>> {
    let lw = longwave_matrices(lp, params)?;
    let mut r = lw.alphas.to_vec();
    r.extend_from_slice(&coeffs.alpha[1..]);
    Ok(r)
}

/// Checks dx <= sqrt(alpha_min t)/4 and L >= max(8 sqrt(alpha_max t), 4 c_s t).
pub fn check_resolution(t: f64, grid: &GridSpec, lp: &LinearizationPoint, params: &GasParameters) -> Result<()> {
    grid.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("physical inversion needs t > 0, got {t}")));
    }
    let coeffs = approx_eigenvalues(0.0, lp, params, [0.0; 3]).coeffs;
    let rates = kernel_rates(lp, params, &coeffs)?;
    let a_min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let a_max = rates.iter().cloned().fold(0.0, f64::max);
    let required = (a_min * t).sqrt() / 4.0;
    if grid.dx() > required {
        return Err(Error::UnderResolved { dx: grid.dx(), required });
    }
    let need_l = (8.0 * (a_max * t).sqrt()).max(4.0 * lp.sound_speed * t);
    if grid.half_width < need_l {
        return Err(Error::InvalidGrid(format!(
            "half width {} too small for t = {t}, need >= {need_l:.4}",
            grid.half_width
        )));
    }
    Ok(())
}

/// Inverse transform of a Hermitian frequency table, f(eta) for eta >= 0.
/// Returns node positions, real kernel samples and the discarded imaginary residue.
pub fn invert_hermitian<F>(grid: &GridSpec, f: F) -> (Vec<f64>, Vec<Matrix4<f64>>, f64)
where
    F: Fn(f64) -> CMat4,
{
    let n = grid.cells;
    let l = grid.half_width;
    let half = n / 2;
    let table: Vec<CMat4> = (0..=half).map(|k| f(std::f64::consts::PI * k as f64 / l)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n);
    let mut out = vec![Matrix4::<f64>::zeros(); n];
    let mut imag: f64 = 0.0;
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for r in 0..4 {
        for c in 0..4 {
            for k in 0..n {
                // signed frequency index
                let ks = if k <= half { k as i64 } else { k as i64 - n as i64 };
                let val = if ks == half as i64 {
                    // Nyquist: average of +eta and -eta
                    C64::new(table[half][(r, c)].re, 0.0)
                } else if ks >= 0 {
                    table[ks as usize][(r, c)]
                } else {
                    table[(-ks) as usize][(r, c)].conj()
                };
                let sign = if ks.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[k] = val * (sign / (2.0 * l));
            }
            fft.process(&mut buf);
            for j in 0..n {
                out[j][(r, c)] = buf[j].re;
                imag = imag.max(buf[j].im.abs());
            }
        }
    }
    (grid.nodes(), out, imag)
}

pub fn greens_physical(t: f64, grid: &GridSpec, lp: &LinearizationPoint, params: &GasParameters) -> Result<GreensPhysicalSlice> {
    check_resolution(t, grid, lp, params)?;
    let sm = assemble_linearization(lp, params);
    let coeffs = approx_eigenvalues(0.0, lp, params, [0.0; 3]).coeffs;
    let beta1 = coeffs.beta[0];
    let mut e11 = Matrix4::zeros();
    e11[(0, 0)] = 1.0;
    let delta = e11 * (beta1 * t).exp();
    let delta_c = delta.map(|x| C64::new(x, 0.0));
    let (x, g, imag) = invert_hermitian(grid, |eta| greens_fourier(eta, t, &sm).g - delta_c);
    let dx = grid.dx();
    let zeroth = g.iter().fold(Matrix4::zeros(), |acc, m| acc + m) * dx + delta;
    Ok(GreensPhysicalSlice {
        t,
        x,
        g,
        delta_rate: beta1,
        delta_coefficient: delta,
        gaussian_widths: [coeffs.alpha[1], coeffs.alpha[2], coeffs.alpha[3]],
        imag_residue: imag,
        zeroth_moment: zeroth,
    })
}

/// Ghat^dagger(eta, t) = Ghat - exp(lambda_4 t) Mhat_4 - sum_{j<=3} exp(lambda_j* t) Mhat_j*.
/// The exact part comes from greens_fourier, so the matrix-exponential path
/// covers eta near zero and the coalescence point.
pub fn regular_fourier(eta: f64, t: f64, sm: &SystemMatrices, lp: &LinearizationPoint, params: &GasParameters, ks: [f64; 3]) -> CMat4 {
    let g = greens_fourier(eta, t, sm).g;
    let l4 = sm.lambda4(eta);
    let ae = approx_eigenvalues(eta, lp, params, ks);
    let sing = singular_mode_matrices(eta, &ae, sm);
    let mut out = g - reactant_projector(sm.heat_q) * C64::new((l4 * t).exp(), 0.0);
    for j in 0..3 {
        out -= sing.m_star[j] * C64::new((ae.lambdas_star[j] * t).exp(), 0.0);
    }
    out
}

/// Sum over j <= 3 of exp(lambda_j* t) Mhat_j* plus the reactant mode.
pub fn singular_fourier(eta: f64, t: f64, sm: &SystemMatrices, lp: &LinearizationPoint, params: &GasParameters, ks: [f64; 3]) -> CMat4 {
    let ae = approx_eigenvalues(eta, lp, params, ks);
    let sing = singular_mode_matrices(eta, &ae, sm);
    (0..4).fold(CMat4::zeros(), |acc, j| acc + sing.m_star[j] * C64::new((ae.lambdas_star[j] * t).exp(), 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub singular: GreensPhysicalSlice,
    pub regular: GreensPhysicalSlice,
    /// max over the frequency grid of |row 4 of Ghat^dagger|
    pub row4_max: f64,
    /// max over the frequency grid of |Ghat^dagger (0, 0, q, 1)^T|
    pub mode4_max: f64,
    /// max over the frequency grid of the literal column 4, -q times column 3
    pub column4_max: f64,
}

pub fn split_singular_regular(
    t: f64,
    grid: &GridSpec,
    lp: &LinearizationPoint,
    params: &GasParameters,
    ks: [f64; 3],
) -> Result<SplitReport> {
    check_resolution(t, grid, lp, params)?;
    let sm = assemble_linearization(lp, params);
    let coeffs = approx_eigenvalues(0.0, lp, params, ks).coeffs;
    let beta1 = coeffs.beta[0];
    let mut e11 = Matrix4::zeros();
    e11[(0, 0)] = 1.0;
    let delta = e11 * (beta1 * t).exp();
    let delta_c = delta.map(|x| C64::new(x, 0.0));
    let widths = [coeffs.alpha[1], coeffs.alpha[2], coeffs.alpha[3]];
    let dx = grid.dx();

    let (x, gs, imag_s) = invert_hermitian(grid, |eta| singular_fourier(eta, t, &sm, lp, params, ks) - delta_c);
    let zeroth_s = gs.iter().fold(Matrix4::zeros(), |acc, m| acc + m) * dx + delta;
    let singular = GreensPhysicalSlice {
        t,
        x: x.clone(),
        g: gs,
        delta_rate: beta1,
        delta_coefficient: delta,
        gaussian_widths: widths,
        imag_residue: imag_s,
        zeroth_moment: zeroth_s,
    };

    let (_, gr, imag_r) = invert_hermitian(grid, |eta| regular_fourier(eta, t, &sm, lp, params, ks));
    let zeroth_r = gr.iter().fold(Matrix4::zeros(), |acc, m| acc + m) * dx;
    let regular = GreensPhysicalSlice {
        t,
        x,
        g: gr,
        delta_rate: beta1,
        delta_coefficient: Matrix4::zeros(),
        gaussian_widths: widths,
        imag_residue: imag_r,
        zeroth_moment: zeroth_r,
    };

    let q = params.heat_q;
    let (mut row4, mut mode4, mut col4) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..=grid.cells / 2 {
        let eta = std::f64::consts::PI * k as f64 / grid.half_width;
        let gd = regular_fourier(eta, t, &sm, lp, params, ks);
        for c in 0..4 {
            row4 = row4.max(gd[(3, c)].norm());
        }
        for r in 0..4 {
            mode4 = mode4.max((gd[(r, 2)] * q + gd[(r, 3)]).norm());
            col4 = col4.max(gd[(r, 3)].norm());
        }
    }
    Ok(SplitReport { singular, regular, row4_max: row4, mode4_max: mode4, column4_max: col4 })
}

/// sup over x and all entries of |G(x)|.
pub fn sup_norm(slice: &GreensPhysicalSlice) -> f64 {
    slice.g.iter().map(|m| m.amax()).fold(0.0, f64::max)
}
