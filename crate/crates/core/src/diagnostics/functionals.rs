//! The stopping-time functional of one state.

use serde::{Deserialize, Serialize};

use super::norms::{bv_norm, l1, linf};
use crate::error::{Error, Result};
use crate::params::{FieldState, GridSpec};
use crate::solver::ops::{derivatives, Derivatives};

pub const SCRIPT_G_TERMS: [&str; 15] = [
    "v_inf_weighted",
    "u_inf_weighted",
    "theta_inf_weighted",
    "z_inf_weighted",
    "v_l1",
    "u_l1",
    "theta_l1",
    "z_l1",
    "v_bv",
    "u_bv",
    "theta_bv",
    "z_bv",
    "u_x_inf_weighted",
    "theta_x_inf_weighted",
    "z_x_inf_weighted",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScriptG {
    pub t: f64,
    pub terms: [f64; 15],
    pub total: f64,
}

/// sqrt(t+1)-weighted sup norms, L1 and BV norms of (v-1, u, theta-1, z),
/// and sqrt(t)-weighted sup norms of u_x, theta_x, z_x, at the state's time.
pub fn script_g_terms(state: &FieldState, grid: &GridSpec, derivs: Option<&Derivatives>) -> Result<ScriptG> {
    let d = derivs.ok_or(Error::MissingDerivatives)?;
    let t = state.t.max(0.0);
    let dx = grid.dx();
    let dv: Vec<f64> = state.v.iter().map(|v| v - 1.0).collect();
    let dth: Vec<f64> = state.theta.iter().map(|v| v - 1.0).collect();
    let fields = [&dv, &state.u, &dth, &state.z];
    let w = (t + 1.0).sqrt();
    let mut terms = [0.0; 15];
    for (k, f) in fields.iter().enumerate() {
        terms[k] = w * linf(f);
        terms[4 + k] = l1(f, dx);
        let jumps = if k == 0 { state.v_jumps.as_slice() } else { &[] };
        terms[8 + k] = bv_norm(f, grid, jumps).bv_total;
    }
    let s = t.sqrt();
    terms[12] = s * linf(&d.u_x);
    terms[13] = s * linf(&d.theta_x);
    terms[14] = s * linf(&d.z_x);
    Ok(ScriptG { t, terms, total: terms.iter().sum() })
}

pub fn script_g(state: &FieldState, grid: &GridSpec, derivs: Option<&Derivatives>) -> Result<f64> {
    Ok(script_g_terms(state, grid, derivs)?.total)
}

/// Same, with derivatives taken by the solver's difference operators.
pub fn script_g_of_state(state: &FieldState, grid: &GridSpec) -> f64 {
    let d = derivatives(state, grid);
    script_g_terms(state, grid, Some(&d)).expect("derivatives supplied").total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(scale: f64, grid: &GridSpec) -> FieldState {
        let x = grid.centers();
        FieldState {
            t: 0.3,
            v: x.iter().map(|x| 1.0 + scale * (-x * x).exp()).collect(),
            u: x.iter().map(|x| scale * 0.5 * (-(x - 0.3) * (x - 0.3)).exp()).collect(),
            theta: x.iter().map(|x| 1.0 - scale * 0.2 * (-x * x).exp()).collect(),
            z: x.iter().map(|x| scale * 0.1 * (-x * x / 2.0).exp()).collect(),
            v_jumps: vec![],
        }
    }

    #[test]
    fn equilibrium_and_homogeneity() {
        let grid = GridSpec::periodic(6.0, 128).unwrap();
        let eq = FieldState::equilibrium(128, 0.5);
        assert_eq!(script_g_of_state(&eq, &grid), 0.0);
        let a = script_g_of_state(&state(0.01, &grid), &grid);
        let b = script_g_of_state(&state(0.03, &grid), &grid);
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
        assert!(matches!(script_g(&eq, &grid, None), Err(Error::MissingDerivatives)));
    }
}
