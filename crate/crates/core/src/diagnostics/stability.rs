//! Empirical L1 stability of two nearby solutions.

use serde::{Deserialize, Serialize};

use super::norms::{bv_norm, l1, linf};
use crate::error::Result;
use crate::params::InitialData;
use crate::solver::{l1_distance, reference_solve, Model, ReferenceSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// summed L1 distance of the four fields
    pub distances: Vec<f64>,
    /// L1 + sup + BV of the v difference plus sup + L1 of the others, at t = 0
    pub denominator: f64,
    /// distances / denominator; all zero for identical data
    pub ratios: Vec<f64>,
    pub fitted_constant: f64,
    pub identical: bool,
}

pub fn data_distance(a: &InitialData, b: &InitialData) -> f64 {
    let dx = a.grid.dx();
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<f64>>();
    let dv = diff(&a.v0, &b.v0);
    let mut jumps = a.v_jumps.clone();
    jumps.extend(b.v_jumps.iter().cloned());
    let mut total = l1(&dv, dx) + bv_norm(&dv, &a.grid, &jumps).bv_total + linf(&dv);
    for (x, y) in [(&a.u0, &b.u0), (&a.theta0, &b.theta0), (&a.z0, &b.z0)] {
        let d = diff(x, y);
        total += linf(&d) + l1(&d, dx);
    }
    total
}

pub fn stability_probe(a: &InitialData, b: &InitialData, model: &Model, settings: &ReferenceSettings) -> Result<StabilityReport> {
    let ta = reference_solve(a, model, settings)?;
    let tb = reference_solve(b, model, settings)?;
    let dx = a.grid.dx();
    let denominator = data_distance(a, b);
    let identical = denominator == 0.0;
    let times = ta.times();
    let distances: Vec<f64> =
        ta.snapshots.iter().zip(&tb.snapshots).map(|(x, y)| l1_distance(&x.state, &y.state, dx)).collect();
    let ratios: Vec<f64> = if identical { vec![0.0; distances.len()] } else { distances.iter().map(|d| d / denominator).collect() };
    let fitted_constant = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(StabilityReport { times, distances, denominator, ratios, fitted_constant, identical })
}
