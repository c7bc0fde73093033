//! Duhamel integrals with tabulated heat kernels, used to validate the direct
//! time stepping of the linear sub-problems on small grids.
//!
//! For a time-independent source w and a constant conductivity,
//! int_0^t S(sigma) w d(sigma) is evaluated by product integration: on each
//! subinterval sqrt(sigma) S(sigma) w is frozen at the midpoint and the weight
//! sigma^-1/2 is integrated exactly.

use crate::error::{Error, Result};
use crate::heatkernel::{solve_kernel, ConductivityField, ConductivityProfile, KernelOptions, KernelSolution};
use crate::params::GridSpec;

/// Exact moment of sigma^-1/2 over [a, b].
pub fn inverse_sqrt_moment(a: f64, b: f64) -> f64 {
    2.0 * (b.sqrt() - a.sqrt())
}

/// Periodic convolution of a translation-invariant kernel with w.
pub fn semigroup_apply(kernel: &KernelSolution, w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let c = kernel.grid.cell_of(kernel.y);
    let dx = kernel.dx();
    (0..n)
        .map(|i| (0..n).map(|j| kernel.h[(i + c + n - j) % n] * w[j]).sum::<f64>() * dx)
        .collect()
}

/// int_0^t S(sigma) w d(sigma) with `intervals` subintervals uniform in sqrt(sigma).
pub fn duhamel_time_independent(
    f: &ConductivityField,
    w: &[f64],
    t: f64,
    grid: &GridSpec,
    intervals: usize,
) -> Result<Vec<f64>> {
    if f.profile != ConductivityProfile::Constant || !f.jumps.is_empty() {
        return Err(Error::InvalidParameter("Duhamel quadrature needs a constant conductivity".into()));
    }
    let opts = KernelOptions { min_cells_per_width: 0.0, ..Default::default() };
    let n = w.len();
    let mut out = vec![0.0; n];
    for m in 0..intervals {
        let a = t * (m as f64 / intervals as f64).powi(2);
        let b = t * ((m + 1) as f64 / intervals as f64).powi(2);
        let mid = 0.25 * (a.sqrt() + b.sqrt()).powi(2);
        let k = solve_kernel(f, 0.0, 0.0, mid, grid, &opts)?;
        let g = semigroup_apply(&k, w);
        let weight = inverse_sqrt_moment(a, b) * mid.sqrt();
        for i in 0..n {
            out[i] += weight * g[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::ops::grad_cells;
    use crate::tridiag::implicit_diffusion;

    /// U_t = mu U_xx - p_x with a pressure that jumps: direct implicit
    /// stepping against the Duhamel form on 128 cells.
    #[test]
    fn direct_stepping_matches_duhamel() {
        let grid = GridSpec::periodic(4.0, 128).unwrap();
        let dx = grid.dx();
        let mu = 1.0;
        let t = 0.1;
        let p: Vec<f64> = grid.centers().iter().map(|&x| if x > -0.5 && x < 0.7 { 0.42 } else { 0.4 + 0.01 * (-x * x).exp() }).collect();
        let w: Vec<f64> = grad_cells(&p, dx).iter().map(|g| -g).collect();

        let steps = 2000;
        let dt = t / steps as f64;
        let mut u = vec![0.0; grid.cells];
        for _ in 0..steps {
            for (ui, wi) in u.iter_mut().zip(&w) {
                *ui += dt * wi;
            }
            implicit_diffusion(&vec![mu; grid.cells], None, &mut u, dt, dx, true);
        }
        let d = duhamel_time_independent(&ConductivityField::constant(mu), &w, t, &grid, 40).unwrap();
        let err: f64 = u.iter().zip(&d).map(|(a, b)| (a - b).abs()).sum::<f64>() * dx;
        let size: f64 = u.iter().map(|a| a.abs()).sum::<f64>() * dx;
        assert!(err < 0.02 * size, "err {err} size {size}");
    }
}
