//! Discrete operators on the staggered grid, all periodically indexed.

use serde::{Deserialize, Serialize};

use crate::params::{Boundary, FieldState, GridSpec};

/// Cell values from node values: (u[i+1] - u[i]) / dx.
pub fn div_nodes(u: &[f64], dx: f64) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| (u[(i + 1) % n] - u[i]) / dx).collect()
}

/// Node values from cell values: (f[i] - f[i-1]) / dx.
pub fn grad_cells(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| (f[i] - f[(i + n - 1) % n]) / dx).collect()
}

/// Node average of cell values.
pub fn cells_to_nodes(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| 0.5 * (f[i] + f[(i + n - 1) % n])).collect()
}

/// Cell average of node values.
pub fn nodes_to_cells(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| 0.5 * (u[i] + u[(i + 1) % n])).collect()
}

/// Link conductivities for cell unknowns: link i is node i+1, harmonic mean.
pub fn harmonic_links(kappa: &[f64]) -> Vec<f64> {
    let n = kappa.len();
    (0..n)
        .map(|i| {
            let (a, b) = (kappa[i], kappa[(i + 1) % n]);
            2.0 * a * b / (a + b)
        })
        .collect()
}

/// Node flux k * grad for cell unknowns, from harmonic links.
pub fn node_flux(links: &[f64], f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|j| links[(j + n - 1) % n] * (f[j] - f[(j + n - 1) % n]) / dx).collect()
}

pub fn pressure(a: f64, v: &[f64], theta: &[f64]) -> Vec<f64> {
    v.iter().zip(theta).map(|(v, t)| a * t / v).collect()
}

/// Sponge rates at cell centers and at nodes, or None on periodic grids.
pub fn sponge(grid: &GridSpec) -> Option<(Vec<f64>, Vec<f64>)> {
    if grid.boundary == Boundary::Periodic {
        return None;
    }
    let l = grid.half_width;
    let start = 0.8 * l;
    let rate = |x: f64| {
        let s = ((x.abs() - start) / (l - start)).max(0.0);
        SPONGE_RATE * s * s
    };
    Some((grid.centers().into_iter().map(rate).collect(), grid.nodes().into_iter().map(rate).collect()))
}

pub const SPONGE_RATE: f64 = 5.0;

/// u_x on cells, theta_x and z_x on nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derivatives {
    pub u_x: Vec<f64>,
    pub theta_x: Vec<f64>,
    pub z_x: Vec<f64>,
}

impl Derivatives {
    pub fn scaled(&self, s: f64) -> Self {
        let m = |f: &Vec<f64>| f.iter().map(|x| x * s).collect();
        Derivatives { u_x: m(&self.u_x), theta_x: m(&self.theta_x), z_x: m(&self.z_x) }
    }
}

pub fn derivatives(state: &FieldState, grid: &GridSpec) -> Derivatives {
    let dx = grid.dx();
    Derivatives { u_x: div_nodes(&state.u, dx), theta_x: grad_cells(&state.theta, dx), z_x: grad_cells(&state.z, dx) }
}
