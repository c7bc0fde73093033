//! Reactant mass balance and the burn rate M(t) = dx * sum K phi(theta) z.

use serde::{Deserialize, Serialize};

use crate::solver::{Model, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassLedger {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub burn_rate: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// max |mass + cumulative - mass(0)|
    pub balance_error: f64,
    /// largest increase of mass between snapshots (zero when monotone)
    pub mass_increase: f64,
    /// largest increase of M between snapshots with t >= nu0
    pub burn_rate_increase: f64,
    /// sup over t >= nu0 of (1 + t) M(t)
    pub weighted_burn_sup: f64,
    pub nu0: f64,
}

impl MassLedger {
    pub fn burn_rate_monotone(&self, tol: f64) -> bool {
        self.burn_rate_increase <= tol
    }
}

pub fn mass_ledger(traj: &Trajectory, model: &Model, nu0: f64) -> MassLedger {
    let dx = traj.grid.dx();
    let p = &model.params;
    let mut out = MassLedger {
        times: Vec::new(),
        mass: Vec::new(),
        burn_rate: Vec::new(),
        cumulative: Vec::new(),
        balance_error: 0.0,
        mass_increase: 0.0,
        burn_rate_increase: 0.0,
        weighted_burn_sup: 0.0,
        nu0,
    };
    for snap in &traj.snapshots {
        let s = &snap.state;
        let mass = dx * s.z.iter().sum::<f64>();
        let rate = dx * s.theta.iter().zip(&s.z).map(|(t, z)| p.rate_k * model.rate.eval(*t) * z).sum::<f64>();
        if let (Some(&pm), Some(&pr), Some(&pt)) = (out.mass.last(), out.burn_rate.last(), out.times.last()) {
            out.mass_increase = out.mass_increase.max(mass - pm);
            if pt >= nu0 {
                out.burn_rate_increase = out.burn_rate_increase.max(rate - pr);
            }
        }
        if s.t >= nu0 {
            out.weighted_burn_sup = out.weighted_burn_sup.max((1.0 + s.t) * rate);
        }
        out.times.push(s.t);
        out.mass.push(mass);
        out.burn_rate.push(rate);
        out.cumulative.push(snap.cumulative_burn);
    }
    let m0 = out.mass[0];
    out.balance_error = out.mass.iter().zip(&out.cumulative).map(|(m, c)| (m + c - m0).abs()).fold(0.0, f64::max);
    out
}
