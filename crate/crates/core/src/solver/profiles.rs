//! Named initial-data profiles with amplitudes and jump seeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{smallness_measure, GridSpec, InitialData, Jump};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// amplitude * exp(-(x - center)^2 / width^2)
    Gaussian { amplitude: f64, center: f64, width: f64 },
    /// amplitude * x/width * exp(-(x - center)^2 / width^2), zero mean
    Dipole { amplitude: f64, center: f64, width: f64 },
    /// amplitude on [left, right], zero elsewhere
    Box { amplitude: f64, left: f64, right: f64 },
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Gaussian { amplitude, center, width } => {
                let s = (x - center) / width;
                amplitude * (-s * s).exp()
            }
            Profile::Dipole { amplitude, center, width } => {
                let s = (x - center) / width;
                amplitude * s * (-s * s).exp()
            }
            Profile::Box { amplitude, left, right } => {
                if x >= left && x <= right {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn scaled(&self, f: f64) -> Profile {
        match *self {
            Profile::Zero => Profile::Zero,
            Profile::Gaussian { amplitude, center, width } => Profile::Gaussian { amplitude: amplitude * f, center, width },
            Profile::Dipole { amplitude, center, width } => Profile::Dipole { amplitude: amplitude * f, center, width },
            Profile::Box { amplitude, left, right } => Profile::Box { amplitude: amplitude * f, left, right },
        }
    }
}

/// Perturbations of (v, u, theta, z) around (1, 0, 1, 0). Seeded jumps add
/// size * H(x - position) to v; on periodic grids they should sum to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialProfile {
    pub v: Profile,
    pub u: Profile,
    pub theta: Profile,
    pub z: Profile,
    #[serde(default)]
    pub v_jumps: Vec<Jump>,
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile {
            v: Profile::Gaussian { amplitude: 0.5, center: -0.5, width: 1.0 },
            u: Profile::Gaussian { amplitude: 0.5, center: 0.3, width: 0.8 },
            theta: Profile::Gaussian { amplitude: 1.0, center: 0.5, width: 1.0 },
            z: Profile::Gaussian { amplitude: 1.0, center: 0.0, width: 1.0 },
            v_jumps: Vec::new(),
        }
    }
}

impl InitialProfile {
    pub fn scaled(&self, f: f64) -> Self {
        InitialProfile {
            v: self.v.scaled(f),
            u: self.u.scaled(f),
            theta: self.theta.scaled(f),
            z: self.z.scaled(f),
            v_jumps: self.v_jumps.iter().map(|j| Jump { position: j.position, size: j.size * f }).collect(),
        }
    }

    pub fn build(&self, grid: &GridSpec) -> Result<InitialData> {
        grid.validate()?;
        let x = grid.centers();
        let jumps = |x: f64| self.v_jumps.iter().filter(|j| x > j.position).map(|j| j.size).sum::<f64>();
        let data = InitialData {
            grid: *grid,
            v0: x.iter().map(|&x| 1.0 + self.v.eval(x) + jumps(x)).collect(),
            u0: grid.nodes().iter().map(|&x| self.u.eval(x)).collect(),
            theta0: x.iter().map(|&x| 1.0 + self.theta.eval(x)).collect(),
            z0: x.iter().map(|&x| self.z.eval(x)).collect(),
            v_jumps: self.v_jumps.clone(),
        };
        data.validate()?;
        Ok(data)
    }

    /// Rescales all amplitudes so the perturbation smallness equals delta_hat.
    pub fn build_scaled(&self, grid: &GridSpec, delta_hat: f64) -> Result<InitialData> {
        let unit = smallness_measure(&self.build(grid)?).perturbation;
        if unit == 0.0 {
            return Err(Error::InvalidParameter("profile has zero perturbation; cannot rescale".into()));
        }
        self.scaled(delta_hat / unit).build(grid)
    }

    /// Adds this profile's perturbation on top of existing data.
    pub fn superpose(&self, base: &InitialData) -> Result<InitialData> {
        let extra = self.build(&base.grid)?;
        let add = |a: &[f64], b: &[f64], shift: f64| a.iter().zip(b).map(|(x, y)| x + y - shift).collect::<Vec<f64>>();
        let mut v_jumps = base.v_jumps.clone();
        v_jumps.extend(extra.v_jumps);
        let data = InitialData {
            grid: base.grid,
            v0: add(&base.v0, &extra.v0, 1.0),
            u0: add(&base.u0, &extra.u0, 0.0),
            theta0: add(&base.theta0, &extra.theta0, 1.0),
            z0: add(&base.z0, &extra.z0, 0.0),
            v_jumps,
        };
        data.validate()?;
        Ok(data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescaling_hits_target() {
        let grid = GridSpec::periodic(8.0, 256).unwrap();
        let data = InitialProfile::default().build_scaled(&grid, 0.02).unwrap();
        assert!((smallness_measure(&data).perturbation - 0.02).abs() < 1e-12);
    }

    #[test]
    fn superpose_adds_perturbations() {
        let grid = GridSpec::periodic(4.0, 64).unwrap();
        let a = InitialProfile::default().scaled(0.1);
        let b = a.superpose(&a.build(&grid).unwrap()).unwrap();
        let twice = a.scaled(2.0).build(&grid).unwrap();
        for (x, y) in b.v0.iter().zip(&twice.v0).chain(b.theta0.iter().zip(&twice.theta0)) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(b.u0, twice.u0);
    }
}
