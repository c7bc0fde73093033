//! Picard iteration for the nonlinear Cauchy problem, a direct reference
//! solver, time continuation and the interface-flux check.
//!
//! Both solvers share one staggered finite-volume grid: v, theta and z are
//! cell averages, u lives on the nodes -L + i dx (u[i] sits on the left face
//! of cell i). All solvers index periodically. On an absorbing-pad grid a
//! sponge layer in the outer fifth of the domain relaxes v, u and theta to
//! equilibrium; z is never damped so the reactant ledger stays exact.

pub mod duhamel;
pub mod flux;
pub mod ops;
pub mod picard;
pub mod profiles;
pub mod reference;

use serde::{Deserialize, Serialize};

use crate::params::{FieldState, GasParameters, GridSpec, ReactionRate};

pub use flux::{flux_continuity_check, weak_residual, FluxJumpReport, WeakResidual};
pub use ops::{derivatives, Derivatives};
pub use picard::{
    base_step, continue_solution, contraction_functional, picard_step, run_picard, ContractionReport, Iterate,
    PicardSettings, FUNCTIONAL_COMPONENTS,
};
pub use profiles::{InitialProfile, Profile};
pub use reference::{reference_solve, ReferenceSettings};

/// Gas parameters together with the reaction-rate function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: GasParameters,
    pub rate: ReactionRate,
}

impl Model {
    pub fn new(params: GasParameters, rate: ReactionRate) -> Self {
        Model { params, rate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: FieldState,
    /// integral of dx * sum K phi z over [0, t] as booked by the scheme
    pub cumulative_burn: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub snapshots: Vec<Snapshot>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    /// Snapshot whose time is closest to t.
    pub fn at(&self, t: f64) -> &Snapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.state.t - t).abs().total_cmp(&(b.state.t - t).abs()))
            .expect("trajectory has at least one snapshot")
    }
}

/// Summed L1 distance of the four fields.
pub fn l1_distance(a: &FieldState, b: &FieldState, dx: f64) -> f64 {
    let d = |x: &[f64], y: &[f64]| dx * x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>();
    d(&a.v, &b.v) + d(&a.u, &b.u) + d(&a.theta, &b.theta) + d(&a.z, &b.z)
}

/// Largest summed L1 gap between two trajectories over the snapshot times of
/// `a` that `b` also has (to within half a step).
pub fn max_l1_gap(a: &Trajectory, b: &Trajectory) -> f64 {
    let dx = a.grid.dx();
    let tol = 1e-9;
    let mut gap: f64 = 0.0;
    let mut j = 0;
    for sa in &a.snapshots {
        while j + 1 < b.snapshots.len() && b.snapshots[j].state.t < sa.state.t - tol {
            j += 1;
        }
        let sb = &b.snapshots[j];
        if (sb.state.t - sa.state.t).abs() <= tol {
            gap = gap.max(l1_distance(&sa.state, &sb.state, dx));
        }
    }
    gap
}
