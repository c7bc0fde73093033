//! Direct method-of-lines solver used as an oracle for the Picard iteration.
//!
//! Conservative in all four equations: v and u by the staggered difference
//! operators, the total energy E = c_v theta + u^2/2 + q z by a flux form
//! (theta is recovered from E), and z with the reaction sink. Diffusion,
//! viscosity and reaction are implicit with coefficients frozen at the old
//! level; pressure is explicit (u is advanced before v). The energy sum is
//! therefore conserved to round-off on periodic grids.

use serde::{Deserialize, Serialize};

use super::ops::{cells_to_nodes, div_nodes, grad_cells, harmonic_links, node_flux, pressure, sponge};
use super::{Model, Snapshot, Trajectory};
use crate::error::{Error, Result};
use crate::params::{FieldState, GridSpec, InitialData};
use crate::tridiag::implicit_diffusion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSettings {
    pub t_end: f64,
    /// acoustic Courant number dt * c / dx
    pub cfl: f64,
    pub dt_max: f64,
    /// snapshot times besides t = 0 and t_end; steps are shortened to hit them
    #[serde(default)]
    pub output_times: Vec<f64>,
    /// record every step (overrides output_times)
    #[serde(default)]
    pub every_step: bool,
}

impl ReferenceSettings {
    pub fn new(t_end: f64) -> Self {
        ReferenceSettings { t_end, cfl: 0.4, dt_max: 1e-2, output_times: Vec::new(), every_step: false }
    }
}

pub const DT_FLOOR: f64 = 1e-12;

/// Cell kinetic energy: the mean of u^2/2 over the two faces.
fn kinetic(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| 0.25 * (u[i] * u[i] + u[(i + 1) % n] * u[(i + 1) % n])).collect()
}

struct Stepper<'a> {
    model: &'a Model,
    grid: GridSpec,
    sponge: Option<(Vec<f64>, Vec<f64>)>,
}

impl Stepper<'_> {
    fn max_dt(&self, s: &FieldState, settings: &ReferenceSettings) -> f64 {
        let p = &self.model.params;
        let cmax = s
            .v
            .iter()
            .zip(&s.theta)
            .map(|(v, t)| (p.gamma() * p.a * t / (v * v)).sqrt())
            .fold(0.0, f64::max);
        (settings.cfl * self.grid.dx() / cmax.max(1e-12)).min(settings.dt_max)
    }

    /// One step; returns the new state and the burned mass dx * sum K phi z dt.
    fn step(&self, s: &FieldState, dt: f64) -> Option<(FieldState, f64)> {
        let p = &self.model.params;
        let dx = self.grid.dx();
        let n = s.v.len();
        let (sp_c, sp_n) = match &self.sponge {
            Some((c, nn)) => (Some(c.as_slice()), Some(nn.as_slice())),
            None => (None, None),
        };

        // z with implicit reaction
        let krate: Vec<f64> = s.theta.iter().map(|t| p.rate_k * self.model.rate.eval(*t)).collect();
        let dlinks = harmonic_links(&s.v.iter().map(|v| p.diff / (v * v)).collect::<Vec<_>>());
        let mut z = s.z.clone();
        implicit_diffusion(&dlinks, Some(&krate), &mut z, dt, dx, true);
        let burned = dt * dx * krate.iter().zip(&z).map(|(k, z)| k * z).sum::<f64>();

        // u: implicit viscosity, explicit pressure
        let pr = pressure(p.a, &s.v, &s.theta);
        let gp = grad_cells(&pr, dx);
        let mu_links: Vec<f64> = s.v.iter().map(|v| p.mu / v).collect();
        let mut u: Vec<f64> = s.u.iter().zip(&gp).map(|(u, g)| u - dt * g).collect();
        implicit_diffusion(&mu_links, sp_n, &mut u, dt, dx, true);

        // v
        let ux = div_nodes(&u, dx);
        let mut v: Vec<f64> = s.v.iter().zip(&ux).map(|(v, d)| v + dt * d).collect();
        if let Some(sc) = sp_c {
            for (vi, si) in v.iter_mut().zip(sc) {
                *vi = 1.0 + (*vi - 1.0) / (1.0 + dt * si);
            }
        }

        // energy: explicit work and reactant-enthalpy fluxes, implicit heat flux
        let energy: Vec<f64> = {
            let ke = kinetic(&s.u);
            (0..n).map(|i| p.c_v * s.theta[i] + ke[i] + p.heat_q * s.z[i]).collect()
        };
        let visc: Vec<f64> = (0..n).map(|i| p.mu * ux[i] / s.v[i]).collect();
        let p_nodes = cells_to_nodes(&pr);
        let visc_nodes = cells_to_nodes(&visc);
        let zflux = node_flux(&dlinks, &z, dx);
        let flux: Vec<f64> = (0..n).map(|j| u[j] * (visc_nodes[j] - p_nodes[j]) + p.heat_q * zflux[j]).collect();
        let dflux = div_nodes(&flux, dx);
        let ke_new = kinetic(&u);
        let mut theta: Vec<f64> =
            (0..n).map(|i| (energy[i] + dt * dflux[i] - ke_new[i] - p.heat_q * z[i]) / p.c_v).collect();
        let kappa: Vec<f64> = s.v.iter().map(|v| p.nu / (p.c_v * v)).collect();
        implicit_diffusion(&harmonic_links(&kappa), None, &mut theta, dt, dx, true);
        if let Some(sc) = sp_c {
            for (ti, si) in theta.iter_mut().zip(sc) {
                *ti = 1.0 + (*ti - 1.0) / (1.0 + dt * si);
            }
        }

        if v.iter().any(|x| !(*x > 0.0)) || theta.iter().any(|x| !(*x > 0.0)) || u.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let out = FieldState { t: s.t + dt, v, u, theta, z, v_jumps: s.v_jumps.clone() };
        Some((out, burned))
    }
}

pub fn reference_solve(data: &InitialData, model: &Model, settings: &ReferenceSettings) -> Result<Trajectory> {
    data.validate()?;
    model.params.validate()?;
    model.rate.validate()?;
    if !(settings.t_end >= 0.0 && settings.cfl > 0.0 && settings.dt_max > 0.0) {
        return Err(Error::InvalidParameter("reference solve needs t_end >= 0, cfl > 0, dt_max > 0".into()));
    }
    let stepper = Stepper { model, grid: data.grid, sponge: sponge(&data.grid) };
    let mut targets: Vec<f64> = settings.output_times.iter().cloned().filter(|&t| t > 0.0 && t < settings.t_end).collect();
    targets.push(settings.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut state = data.as_state();
    let mut cum = 0.0;
    let mut snapshots = vec![Snapshot { state: state.clone(), cumulative_burn: 0.0 }];
    let eps = 1e-12 * settings.t_end.max(1.0);
    for &target in &targets {
        while state.t < target - eps {
            // equal steps up to the next target
            let remaining = target - state.t;
            let pieces = (remaining / stepper.max_dt(&state, settings) - 1e-9).ceil().max(1.0);
            let mut dt = remaining / pieces;
            let (next, burned) = loop {
                match stepper.step(&state, dt) {
                    Some(r) => break r,
                    None => {
                        dt *= 0.5;
                        if dt < DT_FLOOR {
                            return Err(Error::StepSizeUnderflow { t: state.t, dt });
                        }
                    }
                }
            };
            state = next;
            if (state.t - target).abs() <= eps {
                state.t = target;
            }
            cum += burned;
            if settings.every_step && state.t < target - eps {
                snapshots.push(Snapshot { state: state.clone(), cumulative_burn: cum });
            }
        }
        if state.t > snapshots.last().map_or(-1.0, |s| s.state.t) {
            snapshots.push(Snapshot { state: state.clone(), cumulative_burn: cum });
        }
    }
    Ok(Trajectory { grid: data.grid, snapshots })
}
