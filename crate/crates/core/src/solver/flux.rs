//! Interface-flux continuity across seeded jumps of v, and the weak-form
//! residual of a trajectory against smooth test functions.

use serde::{Deserialize, Serialize};

use super::ops::{cells_to_nodes, div_nodes, grad_cells, harmonic_links, node_flux, pressure};
use super::{Model, Trajectory};
use crate::params::{FieldState, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpFlux {
    pub position: f64,
    /// interface between cells `interface` and `interface + 1`
    pub interface: usize,
    pub v_jump: f64,
    /// |left - right| of mu u_x / v - p, the heat flux and the reactant flux
    pub flux_jumps: [f64; 3],
    /// max |flux| near the jump, per flux
    pub flux_scales: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxJumpReport {
    pub jumps: Vec<JumpFlux>,
    /// max over jumps, per flux
    pub max_jump: [f64; 3],
}

/// Each side extrapolates its own fluxes to the jump interface, so a
/// continuous flux gives a jump of order dx^2 times its curvature.
pub fn flux_continuity_check(state: &FieldState, grid: &GridSpec, model: &Model) -> FluxJumpReport {
    let p = &model.params;
    let dx = grid.dx();
    let n = state.v.len();
    let w = |i: isize| ((i % n as isize + n as isize) % n as isize) as usize;
    let ux = div_nodes(&state.u, dx);
    let pr = pressure(p.a, &state.v, &state.theta);
    let sigma: Vec<f64> = (0..n).map(|i| p.mu * ux[i] / state.v[i] - pr[i]).collect();
    let kappa: Vec<f64> = state.v.iter().map(|v| p.nu / (p.c_v * v)).collect();
    let heat = node_flux(&harmonic_links(&kappa), &state.theta, dx);
    let dcoef: Vec<f64> = state.v.iter().map(|v| p.diff / (v * v)).collect();
    let react = node_flux(&harmonic_links(&dcoef), &state.z, dx);

    let mut jumps = Vec::new();
    let mut max_jump = [0.0f64; 3];
    for j in &state.v_jumps {
        let a = ((j.position + grid.half_width) / dx - 0.5).floor() as isize;
        // cell fluxes sit dx/2 from the interface, node fluxes dx away
        let cell_jump = |f: &[f64]| {
            let left = 1.5 * f[w(a)] - 0.5 * f[w(a - 1)];
            let right = 1.5 * f[w(a + 1)] - 0.5 * f[w(a + 2)];
            (left - right).abs()
        };
        let node_jump = |f: &[f64]| {
            let left = 2.0 * f[w(a)] - f[w(a - 1)];
            let right = 2.0 * f[w(a + 2)] - f[w(a + 3)];
            (left - right).abs()
        };
        let scale = |f: &[f64]| (a - 3..=a + 4).map(|i| f[w(i)].abs()).fold(0.0, f64::max);
        let fj = [cell_jump(&sigma), node_jump(&heat), node_jump(&react)];
        for k in 0..3 {
            max_jump[k] = max_jump[k].max(fj[k]);
        }
        jumps.push(JumpFlux {
            position: j.position,
            interface: w(a),
            v_jump: (state.v[w(a + 1)] - state.v[w(a)]).abs(),
            flux_jumps: fj,
            flux_scales: [scale(&sigma), scale(&heat), scale(&react)],
        });
    }
    FluxJumpReport { jumps, max_jump }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    /// |integral of the equation against psi| for the v, u, theta, z equations
    pub per_equation: [f64; 4],
    pub max: f64,
}

/// Tests the trajectory against psi(x, t) = exp(-(x - center)^2 / width^2)
/// * sin^2(pi (t - t0) / (t1 - t0)) over its time span, with trapezoidal
/// quadrature in time over the snapshots and midpoint sums in space.
pub fn weak_residual(traj: &Trajectory, model: &Model, center: f64, width: f64) -> WeakResidual {
    let p = &model.params;
    let grid = &traj.grid;
    let dx = grid.dx();
    let xc = grid.centers();
    let xn = grid.nodes();
    let t0 = traj.snapshots[0].state.t;
    let span = traj.last().state.t - t0;
    let b = |x: f64| {
        let s = (x - center) / width;
        (-s * s).exp()
    };
    let bx = |x: f64| -2.0 * (x - center) / (width * width) * b(x);
    let tw = |t: f64| (std::f64::consts::PI * (t - t0) / span).sin().powi(2);
    let twt = |t: f64| std::f64::consts::PI / span * (2.0 * std::f64::consts::PI * (t - t0) / span).sin();
    let (bc, bn): (Vec<f64>, Vec<f64>) = (xc.iter().map(|&x| b(x)).collect(), xn.iter().map(|&x| b(x)).collect());
    let (bxc, bxn): (Vec<f64>, Vec<f64>) = (xc.iter().map(|&x| bx(x)).collect(), xn.iter().map(|&x| bx(x)).collect());

    let mut acc = [0.0f64; 4];
    let m = traj.snapshots.len();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let s = &snap.state;
        let wt = if k == 0 {
            0.5 * (traj.snapshots[1].state.t - s.t)
        } else if k == m - 1 {
            0.5 * (s.t - traj.snapshots[k - 1].state.t)
        } else {
            0.5 * (traj.snapshots[k + 1].state.t - traj.snapshots[k - 1].state.t)
        };
        let (psi, psit) = (tw(s.t), twt(s.t));
        let n = s.v.len();
        let ux = div_nodes(&s.u, dx);
        let pr = pressure(p.a, &s.v, &s.theta);
        let thx = grad_cells(&s.theta, dx);
        let zx = grad_cells(&s.z, dx);
        let vn = cells_to_nodes(&s.v);
        let mut e = [0.0f64; 4];
        for i in 0..n {
            // cell-centred terms
            e[0] += -s.v[i] * bc[i] * psit;
            e[1] += (-pr[i] + p.mu * ux[i] / s.v[i]) * bxc[i] * psi;
            let src = pr[i] / p.c_v * ux[i] - p.mu / (p.c_v * s.v[i]) * ux[i] * ux[i]
                - p.heat_q / p.c_v * p.rate_k * model.rate.eval(s.theta[i]) * s.z[i];
            e[2] += -s.theta[i] * bc[i] * psit + src * bc[i] * psi;
            e[3] += -s.z[i] * bc[i] * psit + p.rate_k * model.rate.eval(s.theta[i]) * s.z[i] * bc[i] * psi;
            // node-centred terms
            e[0] += s.u[i] * bxn[i] * psi;
            e[1] += -s.u[i] * bn[i] * psit;
            e[2] += p.nu / (p.c_v * vn[i]) * thx[i] * bxn[i] * psi;
            e[3] += p.diff / (vn[i] * vn[i]) * zx[i] * bxn[i] * psi;
        }
        for q in 0..4 {
            acc[q] += wt * dx * e[q];
        }
    }
    let per_equation = acc.map(f64::abs);
    WeakResidual { per_equation, max: per_equation.iter().cloned().fold(0.0, f64::max) }
}
