//! L1, sup and BV norms of grid functions.
//!
//! The BV norm is sup norm plus total variation. Total variation is the sum of
//! absolute cell increments; increments at seeded jump positions are booked
//! as the jump part, everything else as the continuous part.

use serde::{Deserialize, Serialize};

use crate::params::{Boundary, GridSpec, Jump};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormReport {
    pub l1: f64,
    pub linf: f64,
    pub bv_total: f64,
    pub bv_jump_part: f64,
    pub bv_continuous_part: f64,
}

impl NormReport {
    pub fn total_variation(&self) -> f64 {
        self.bv_jump_part + self.bv_continuous_part
    }
}

pub fn l1(f: &[f64], dx: f64) -> f64 {
    dx * f.iter().map(|x| x.abs()).sum::<f64>()
}

pub fn linf(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Sum of absolute increments, including the wrap-around increment on a
/// periodic grid.
pub fn total_variation(f: &[f64], boundary: Boundary) -> f64 {
    let mut tv: f64 = f.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    if boundary == Boundary::Periodic && f.len() > 1 {
        tv += (f[0] - f[f.len() - 1]).abs();
    }
    tv
}

pub fn bv_norm(f: &[f64], grid: &GridSpec, jumps: &[Jump]) -> NormReport {
    let n = f.len();
    let mut jump_ifaces: Vec<usize> = jumps.iter().map(|j| grid.interface_of(j.position)).collect();
    jump_ifaces.sort_unstable();
    jump_ifaces.dedup();
    let mut jump_part = 0.0;
    for &i in &jump_ifaces {
        if i + 1 < n {
            jump_part += (f[i + 1] - f[i]).abs();
        }
    }
    let tv = total_variation(f, grid.boundary);
    let linf = linf(f);
    let continuous = (tv - jump_part).max(0.0);
    NormReport {
        l1: l1(f, grid.dx()),
        linf,
        bv_total: linf + tv,
        bv_jump_part: jump_part,
        bv_continuous_part: continuous,
    }
}
