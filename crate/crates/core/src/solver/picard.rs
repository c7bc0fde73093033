//! The Picard iteration. Each iterate solves three linear parabolic problems
//! whose coefficients and sources are frozen at the previous iterate, by
//! implicit Euler on the shared staggered grid, and then integrates
//! V_t = U_x. The fixed point is the fully implicit Euler scheme for the
//! nonlinear system.

use serde::{Deserialize, Serialize};

use super::ops::{div_nodes, grad_cells, harmonic_links, pressure, sponge};
use super::{Model, Snapshot, Trajectory};
use crate::diagnostics::functionals::script_g_of_state;
use crate::diagnostics::norms::{bv_norm, l1, linf};
use crate::error::{Error, Result};
use crate::params::{smallness_measure, FieldState, GridSpec, InitialData};
use crate::tridiag::implicit_diffusion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardSettings {
    /// horizon of one local solve; must lie in (0, 1) for the log weights
    pub t_sharp: f64,
    pub dt: f64,
    pub tol: f64,
    pub n_max: usize,
    /// smallest admissible 1 + V
    pub vacuum_guard: f64,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings { t_sharp: 0.1, dt: 5e-4, tol: 1e-10, n_max: 30, vacuum_guard: 0.1 }
    }
}

impl PicardSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_sharp > 0.0 && self.t_sharp < 1.0) {
            return Err(Error::InvalidParameter(format!("t_sharp must lie in (0, 1), got {}", self.t_sharp)));
        }
        if !(self.dt > 0.0 && self.dt <= self.t_sharp) {
            return Err(Error::InvalidParameter(format!("dt must lie in (0, t_sharp], got {}", self.dt)));
        }
        if self.n_max == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("n_max and tol must be positive".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_sharp / self.dt).round().max(1.0) as usize
    }
}

/// Perturbation fields (V, U, Theta, Z) at every time level of one iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub grid: GridSpec,
    pub t0: f64,
    pub dt: f64,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// dx * sum K phi Z booked in each step (entry 0 unused)
    pub burn: Vec<f64>,
}

impl Iterate {
    pub fn zero(grid: &GridSpec, t0: f64, dt: f64, steps: usize) -> Self {
        let n = grid.cells;
        let lv = vec![vec![0.0; n]; steps + 1];
        Iterate {
            grid: *grid,
            t0,
            dt,
            v: lv.clone(),
            u: lv.clone(),
            theta: lv.clone(),
            z: lv,
            burn: vec![0.0; steps + 1],
        }
    }

    pub fn levels(&self) -> usize {
        self.v.len()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn state(&self, k: usize, v_jumps: &[crate::params::Jump]) -> FieldState {
        FieldState {
            t: self.time(k),
            v: self.v[k].iter().map(|x| 1.0 + x).collect(),
            u: self.u[k].clone(),
            theta: self.theta[k].iter().map(|x| 1.0 + x).collect(),
            z: self.z[k].clone(),
            v_jumps: v_jumps.to_vec(),
        }
    }

    pub fn to_trajectory(&self, v_jumps: &[crate::params::Jump], burn_offset: f64) -> Trajectory {
        let mut cum = burn_offset;
        let snapshots = (0..self.levels())
            .map(|k| {
                if k > 0 {
                    cum += self.dt * self.burn[k];
                }
                Snapshot { state: self.state(k, v_jumps), cumulative_burn: cum }
            })
            .collect();
        Trajectory { grid: self.grid, snapshots }
    }

    fn difference(&self, other: &Iterate) -> Iterate {
        let d = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect()).collect()
        };
        Iterate {
            grid: self.grid,
            t0: self.t0,
            dt: self.dt,
            v: d(&self.v, &other.v),
            u: d(&self.u, &other.u),
            theta: d(&self.theta, &other.theta),
            z: d(&self.z, &other.z),
            burn: self.burn.iter().zip(&other.burn).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Perturbation form of the data.
fn perturbation(data: &InitialData) -> [Vec<f64>; 4] {
    [
        data.v0.iter().map(|v| v - 1.0).collect(),
        data.u0.clone(),
        data.theta0.iter().map(|t| t - 1.0).collect(),
        data.z0.clone(),
    ]
}

/// One Picard step: iterate n+1 from iterate n.
pub fn picard_step(prev: &Iterate, data: &InitialData, model: &Model, settings: &PicardSettings) -> Result<Iterate> {
    let p = &model.params;
    let grid = &prev.grid;
    let dx = grid.dx();
    let dt = prev.dt;
    let steps = prev.levels() - 1;
    let sp = sponge(grid);
    let (sp_cells, sp_nodes) = match &sp {
        Some((c, n)) => (Some(c.as_slice()), Some(n.as_slice())),
        None => (None, None),
    };
    let mut next = Iterate::zero(grid, prev.t0, dt, steps);
    let [v0, u0, th0, z0] = perturbation(data);
    next.v[0] = v0;
    next.u[0] = u0;
    next.theta[0] = th0;
    next.z[0] = z0;

    for k in 0..steps {
        let vp: Vec<f64> = prev.v[k + 1].iter().map(|x| 1.0 + x).collect();
        let thp: Vec<f64> = prev.theta[k + 1].iter().map(|x| 1.0 + x).collect();
        let zp = &prev.z[k + 1];
        let pr = pressure(p.a, &vp, &thp);
        let ux_p = div_nodes(&prev.u[k + 1], dx);
        let reaction: Vec<f64> = thp.iter().zip(zp).map(|(t, z)| p.rate_k * model.rate.eval(*t) * z).collect();

        // U: U_t - (mu/(1+V) U_x)_x = -p_x
        let mu_links: Vec<f64> = vp.iter().map(|v| p.mu / v).collect();
        let gp = grad_cells(&pr, dx);
        let mut u: Vec<f64> = next.u[k].iter().zip(&gp).map(|(u, g)| u - dt * g).collect();
        implicit_diffusion(&mu_links, sp_nodes, &mut u, dt, dx, true);

        // V_t = U_x
        let ux = div_nodes(&u, dx);
        let mut v: Vec<f64> = next.v[k].iter().zip(&ux).map(|(v, d)| v + dt * d).collect();
        if let Some(s) = sp_cells {
            for (vi, si) in v.iter_mut().zip(s) {
                *vi /= 1.0 + dt * si;
            }
        }
        let vmin = v.iter().fold(f64::INFINITY, |m, x| m.min(1.0 + x));
        if vmin < settings.vacuum_guard {
            return Err(Error::VacuumApproached(vmin));
        }

        // Theta: heat equation with the frozen sources of the previous iterate
        let kappa: Vec<f64> = vp.iter().map(|v| p.nu / (p.c_v * v)).collect();
        let mut th: Vec<f64> = (0..grid.cells)
            .map(|i| {
                let n2 = -pr[i] / p.c_v * ux_p[i] + p.mu / (p.c_v * vp[i]) * ux_p[i] * ux_p[i] + p.heat_q / p.c_v * reaction[i];
                next.theta[k][i] + dt * n2
            })
            .collect();
        implicit_diffusion(&harmonic_links(&kappa), sp_cells, &mut th, dt, dx, true);

        // Z: diffusion with the previous iterate's reaction as a sink
        let dcoef: Vec<f64> = vp.iter().map(|v| p.diff / (v * v)).collect();
        let mut z: Vec<f64> = next.z[k].iter().zip(&reaction).map(|(z, r)| z - dt * r).collect();
        implicit_diffusion(&harmonic_links(&dcoef), None, &mut z, dt, dx, true);

        next.burn[k + 1] = dx * reaction.iter().sum::<f64>();
        next.u[k + 1] = u;
        next.v[k + 1] = v;
        next.theta[k + 1] = th;
        next.z[k + 1] = z;
    }
    Ok(next)
}

/// Iterate 1 from the zero perturbation: constant-coefficient heat flows.
pub fn base_step(data: &InitialData, model: &Model, settings: &PicardSettings) -> Result<Iterate> {
    settings.validate()?;
    data.validate()?;
    let zero = Iterate::zero(&data.grid, 0.0, settings.dt, settings.steps());
    picard_step(&zero, data, model, settings)
}

pub const FUNCTIONAL_COMPONENTS: [&str; 15] = [
    "v_inf",
    "v_l1",
    "v_bv",
    "u_inf",
    "u_l1",
    "u_x_inf_sqrt_log",
    "u_x_l1_log",
    "theta_inf_log",
    "theta_l1",
    "theta_x_inf_sqrt_log",
    "theta_x_l1_log",
    "z_inf",
    "z_l1",
    "z_x_inf_sqrt_log",
    "z_x_l1_log",
];

/// Levels of the geometric mesh t_sharp 2^-m, m = 0..20, that exist on the
/// step grid (tau measured from the start of the iterate).
fn log_mesh(levels: usize, dt: f64) -> Vec<usize> {
    let horizon = (levels - 1) as f64 * dt;
    let mut ks: Vec<usize> = (0..=20)
        .map(|m| (horizon * 0.5f64.powi(m) / dt).round() as usize)
        .filter(|&k| k >= 1 && k < levels)
        .collect();
    ks.sort_unstable();
    ks.dedup();
    ks
}

/// The 15 components of the contraction functional for the difference of
/// two iterates. Plain sup-in-time norms use every level; log-weighted ones
/// use the geometric mesh.
pub fn contraction_functional(diff: &Iterate) -> [f64; 15] {
    let grid = &diff.grid;
    let dx = grid.dx();
    let mut c = [0.0f64; 15];
    for k in 1..diff.levels() {
        let v = &diff.v[k];
        c[0] = c[0].max(linf(v));
        c[1] = c[1].max(l1(v, dx));
        c[2] = c[2].max(bv_norm(v, grid, &[]).bv_total);
        c[3] = c[3].max(linf(&diff.u[k]));
        c[4] = c[4].max(l1(&diff.u[k], dx));
        c[8] = c[8].max(l1(&diff.theta[k], dx));
        c[11] = c[11].max(linf(&diff.z[k]));
        c[12] = c[12].max(l1(&diff.z[k], dx));
    }
    for k in log_mesh(diff.levels(), diff.dt) {
        let tau = k as f64 * diff.dt;
        let lg = tau.ln().abs();
        let sq = tau.sqrt() / lg;
        let ux = div_nodes(&diff.u[k], dx);
        let thx = grad_cells(&diff.theta[k], dx);
        let zx = grad_cells(&diff.z[k], dx);
        c[5] = c[5].max(sq * linf(&ux));
        c[6] = c[6].max(l1(&ux, dx) / lg);
        c[7] = c[7].max(linf(&diff.theta[k]) / lg);
        c[9] = c[9].max(sq * linf(&thx));
        c[10] = c[10].max(l1(&thx, dx) / lg);
        c[13] = c[13].max(sq * linf(&zx));
        c[14] = c[14].max(l1(&zx, dx) / lg);
    }
    c
}

/// Ratios below this functional value are not reported.
pub const RATIO_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// F[iterate n - iterate n-1] for n = 1, 2, ...
    pub values: Vec<f64>,
    pub components: Vec<[f64; 15]>,
    /// values[n+1] / values[n] where values[n] exceeds RATIO_FLOOR
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub delta_hat: f64,
    /// sqrt(t_sharp) |log t_sharp| + delta_hat
    pub smallness_factor: f64,
    /// max_ratio / smallness_factor
    pub fitted_c2: f64,
    pub converged: bool,
}

/// Iterates from the zero perturbation until F < tol or n_max iterates.
pub fn run_picard(data: &InitialData, model: &Model, settings: &PicardSettings) -> Result<(Trajectory, ContractionReport)> {
    let (it, report) = run_picard_from(data, 0.0, model, settings)?;
    Ok((it.to_trajectory(&data.v_jumps, 0.0), report))
}

fn run_picard_from(data: &InitialData, t0: f64, model: &Model, settings: &PicardSettings) -> Result<(Iterate, ContractionReport)> {
    settings.validate()?;
    model.params.validate()?;
    model.rate.validate()?;
    data.validate()?;
    let delta_hat = smallness_measure(data).perturbation;
    let mut prev = Iterate::zero(&data.grid, t0, settings.dt, settings.steps());
    let mut values = Vec::new();
    let mut components = Vec::new();
    let mut ratios = Vec::new();
    let mut rising = 0;
    let mut converged = false;
    for _ in 0..settings.n_max {
        let next = picard_step(&prev, data, model, settings)?;
        let comp = contraction_functional(&next.difference(&prev));
        let f: f64 = comp.iter().sum();
        if let Some(&last) = values.last() {
            if last > RATIO_FLOOR {
                let r = f / last;
                ratios.push(r);
                rising = if r >= 1.0 { rising + 1 } else { 0 };
                if rising >= 2 {
                    values.push(f);
                    return Err(Error::NoContraction(values));
                }
            }
        }
        values.push(f);
        components.push(comp);
        prev = next;
        if f < settings.tol {
            converged = true;
            break;
        }
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let ts = settings.t_sharp;
    let smallness_factor = ts.sqrt() * ts.ln().abs() + delta_hat;
    let report = ContractionReport {
        values,
        components,
        ratios,
        max_ratio,
        delta_hat,
        smallness_factor,
        fitted_c2: max_ratio / smallness_factor,
        converged,
    };
    Ok((prev, report))
}

/// Extends a trajectory to t_next by restarting the Picard iteration from its
/// terminal state, one horizon t_sharp at a time. Each restart requires the
/// stopping-time functional of the terminal state to stay below delta.
pub fn continue_solution(
    traj: &Trajectory,
    t_next: f64,
    model: &Model,
    settings: &PicardSettings,
    delta: f64,
) -> Result<(Trajectory, Vec<ContractionReport>)> {
    let mut out = traj.clone();
    let mut reports = Vec::new();
    let tol = 1e-12;
    while out.last().state.t < t_next - tol {
        let last = out.last().clone();
        let g = script_g_of_state(&last.state, &out.grid);
        if g >= delta {
            return Err(Error::SmallnessLost { value: g, limit: delta });
        }
        let remaining = t_next - last.state.t;
        let mut seg = *settings;
        if remaining < seg.t_sharp - tol {
            seg.t_sharp = remaining;
            seg.dt = seg.dt.min(remaining);
        }
        let data = InitialData::from_state(out.grid, &last.state);
        let (it, report) = run_picard_from(&data, last.state.t, model, &seg)?;
        let piece = it.to_trajectory(&last.state.v_jumps, last.cumulative_burn);
        out.snapshots.extend(piece.snapshots.into_iter().skip(1));
        reports.push(report);
    }
    Ok((out, reports))
}
