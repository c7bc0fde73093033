//! Physical constants, the linearization point, reaction rates, grids and
//! field states.

use serde::{Deserialize, Serialize};

use crate::diagnostics::norms;
use crate::error::{Error, Result};

/// Gas and reaction constants.
///
/// `diff` is the reactant diffusivity D, `rate_k` the rate coefficient K and
/// `heat_q` the heat released per unit reactant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasParameters {
    pub a: f64,
    pub c_v: f64,
    pub mu: f64,
    pub nu: f64,
    pub diff: f64,
    pub rate_k: f64,
    pub heat_q: f64,
}

impl GasParameters {
    pub fn new(a: f64, c_v: f64, mu: f64, nu: f64, diff: f64, rate_k: f64, heat_q: f64) -> Result<Self> {
        let p = GasParameters { a, c_v, mu, nu, diff, rate_k, heat_q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("a", self.a), ("c_v", self.c_v), ("mu", self.mu), ("nu", self.nu), ("diff", self.diff)];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [("rate_k", self.rate_k), ("heat_q", self.heat_q)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {value}")));
            }
        }
        Ok(())
    }

    pub fn c_p(&self) -> f64 {
        self.c_v + self.a
    }

    pub fn gamma(&self) -> f64 {
        self.c_p() / self.c_v
    }

    pub fn prandtl(&self) -> f64 {
        self.mu * self.c_p() / self.nu
    }

    /// Lewis number at unit specific volume.
    pub fn lewis(&self) -> f64 {
        self.nu / (self.c_p() * self.diff)
    }

    /// High-frequency ordering hypotheses: Pr < 1, nu/(c_v D) > 1, mu/D < 1.
    pub fn well_ordered(&self) -> bool {
        self.prandtl() < 1.0 && self.nu / (self.c_v * self.diff) > 1.0 && self.mu / self.diff < 1.0
    }
}

impl Default for GasParameters {
    fn default() -> Self {
        default_parameters()
    }
}

/// a = 0.4, c_v = 1, mu = 1, nu = 2, D = nu/c_p = 10/7, K = 1, q = 0.5.
pub fn default_parameters() -> GasParameters {
    GasParameters { a: 0.4, c_v: 1.0, mu: 1.0, nu: 2.0, diff: 10.0 / 7.0, rate_k: 1.0, heat_q: 0.5 }
}

/// Constant background state (v, u, E, z) with the thermodynamic partials
/// used by every closed-form expression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationPoint {
    pub v_bar: f64,
    pub u_bar: f64,
    pub e_bar: f64,
    pub z_bar: f64,
    pub theta_bar: f64,
    /// p = a theta / v
    pub p: f64,
    /// dp/dv at fixed internal energy, -p/v
    pub p_v: f64,
    /// dp/de, a/(c_v v)
    pub p_e: f64,
    /// dtheta/de, 1/c_v
    pub theta_e: f64,
    pub sound_speed: f64,
}

pub fn linearize(params: &GasParameters, state: (f64, f64, f64, f64)) -> Result<LinearizationPoint> {
    let (v, u, e_total, z) = state;
    if !(v > 0.0) {
        return Err(Error::NonpositiveVolume(v));
    }
    let e_int = e_total - 0.5 * u * u - params.heat_q * z;
    if !(e_int > 0.0) {
        return Err(Error::NonpositiveInternalEnergy(e_int));
    }
    let theta = e_int / params.c_v;
    let p = params.a * theta / v;
    let p_v = -p / v;
    let p_e = params.a / (params.c_v * v);
    let sound_speed = (p * p_e - p_v).sqrt();
    Ok(LinearizationPoint {
        v_bar: v,
        u_bar: u,
        e_bar: e_total,
        z_bar: z,
        theta_bar: theta,
        p,
        p_v,
        p_e,
        theta_e: 1.0 / params.c_v,
        sound_speed,
    })
}

/// The equilibrium state (1, 0, c_v, 0).
pub fn equilibrium(params: &GasParameters) -> LinearizationPoint {
    linearize(params, (1.0, 0.0, params.c_v, 0.0)).expect("equilibrium is admissible")
}

impl LinearizationPoint {
    pub fn distance_to_equilibrium(&self, c_v: f64) -> f64 {
        let d = [self.v_bar - 1.0, self.u_bar, self.e_bar - c_v, self.z_bar];
        d.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn check_near_equilibrium(&self, c_v: f64, eps: f64) -> Result<()> {
        let distance = self.distance_to_equilibrium(c_v);
        if distance < eps {
            Ok(())
        } else {
            Err(Error::FarFromEquilibrium { distance, limit: eps })
        }
    }
}

pub const THETA_FLOOR: f64 = 0.1;
pub const THETA_MAX: f64 = 10.0;

/// Nonnegative Lipschitz reaction-rate function phi(theta).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReactionRate {
    /// exp(-activation / max(theta, 0.1))
    ClippedArrhenius { activation: f64 },
    /// max(0, min(1, (theta - theta_ig) / width))
    IgnitionRamp { theta_ig: f64, width: f64 },
    Constant { value: f64 },
}

impl ReactionRate {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ReactionRate::ClippedArrhenius { activation } if !(activation >= 0.0) => {
                Err(Error::InvalidParameter(format!("activation must be >= 0, got {activation}")))
            }
            ReactionRate::IgnitionRamp { width, theta_ig } if !(width > 0.0) || !theta_ig.is_finite() => {
                Err(Error::InvalidParameter(format!("ignition ramp needs width > 0, got {width}")))
            }
            ReactionRate::Constant { value } if !(value >= 0.0) => {
                Err(Error::InvalidParameter(format!("constant rate must be >= 0, got {value}")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match *self {
            ReactionRate::ClippedArrhenius { activation } => (-activation / theta.max(THETA_FLOOR)).exp(),
            ReactionRate::IgnitionRamp { theta_ig, width } => ((theta - theta_ig) / width).clamp(0.0, 1.0),
            ReactionRate::Constant { value } => value,
        }
    }

    /// Lipschitz constant of phi on [0, theta_max].
    pub fn lipschitz_bound(&self, theta_max: f64) -> f64 {
        match *self {
            ReactionRate::ClippedArrhenius { activation } => {
                if activation == 0.0 || theta_max <= THETA_FLOOR {
                    return 0.0;
                }
                // d/dtheta exp(-A/theta) = A/theta^2 exp(-A/theta), maximal at theta = A/2
                let deriv = |t: f64| activation / (t * t) * (-activation / t).exp();
                let peak = (activation / 2.0).clamp(THETA_FLOOR, theta_max);
                deriv(peak).max(deriv(THETA_FLOOR)).max(deriv(theta_max))
            }
            ReactionRate::IgnitionRamp { width, .. } => 1.0 / width,
            ReactionRate::Constant { .. } => 0.0,
        }
    }
}

impl Default for ReactionRate {
    fn default() -> Self {
        ReactionRate::ClippedArrhenius { activation: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Periodic,
    AbsorbingPad,
}

/// Uniform grid on [-L, L) with N cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub cells: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn new(half_width: f64, cells: usize, boundary: Boundary) -> Result<Self> {
        let g = GridSpec { half_width, cells, boundary };
        g.validate()?;
        Ok(g)
    }

    pub fn periodic(half_width: f64, cells: usize) -> Result<Self> {
        Self::new(half_width, cells, Boundary::Periodic)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {}", self.half_width)));
        }
        if self.cells < 16 || self.cells % 2 != 0 {
            return Err(Error::InvalidGrid(format!("cell count must be even and >= 16, got {}", self.cells)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.cells as f64
    }

    /// Cell centers -L + (i + 1/2) dx.
    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells).map(|i| -self.half_width + (i as f64 + 0.5) * dx).collect()
    }

    /// Nodes -L + i dx; node N/2 sits at x = 0.
    pub fn nodes(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells).map(|i| -self.half_width + i as f64 * dx).collect()
    }

    /// Index of the cell containing x (clamped to the grid).
    pub fn cell_of(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.dx()).floor();
        (i.max(0.0) as usize).min(self.cells - 1)
    }

    /// Index i of the interface between cells i and i+1 nearest to x.
    pub fn interface_of(&self, x: f64) -> usize {
        let i = ((x + self.half_width) / self.dx()).round() as isize - 1;
        i.clamp(0, self.cells as isize - 2) as usize
    }
}

/// A discontinuity of v at a fixed position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Jump {
    pub position: f64,
    pub size: f64,
}

pub const TOL_NEG: f64 = 1e-12;

/// Grid samples of (v, u, theta, z) at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    #[serde(default)]
    pub v_jumps: Vec<Jump>,
}

impl FieldState {
    pub fn equilibrium(n: usize, t: f64) -> Self {
        FieldState { t, v: vec![1.0; n], u: vec![0.0; n], theta: vec![1.0; n], z: vec![0.0; n], v_jumps: vec![] }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.v.len();
        if self.u.len() != n || self.theta.len() != n || self.z.len() != n {
            return Err(Error::InvalidState("field arrays differ in length".into()));
        }
        if let Some(i) = self.v.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::InvalidState(format!("v[{i}] = {} is not positive", self.v[i])));
        }
        if let Some(i) = self.theta.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::InvalidState(format!("theta[{i}] = {} is not positive", self.theta[i])));
        }
        if let Some(i) = self.z.iter().position(|&x| !(x >= -TOL_NEG)) {
            return Err(Error::InvalidState(format!("z[{i}] = {} is negative", self.z[i])));
        }
        if self.u.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidState("u is not finite".into()));
        }
        Ok(())
    }
}

/// Initial data on a grid together with any seeded jumps of v0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub grid: GridSpec,
    pub v0: Vec<f64>,
    pub u0: Vec<f64>,
    pub theta0: Vec<f64>,
    pub z0: Vec<f64>,
    #[serde(default)]
    pub v_jumps: Vec<Jump>,
}

impl InitialData {
    pub fn equilibrium(grid: GridSpec) -> Self {
        let n = grid.cells;
        InitialData { grid, v0: vec![1.0; n], u0: vec![0.0; n], theta0: vec![1.0; n], z0: vec![0.0; n], v_jumps: vec![] }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let n = self.grid.cells;
        for (name, f) in [("v0", &self.v0), ("u0", &self.u0), ("theta0", &self.theta0), ("z0", &self.z0)] {
            if f.len() != n {
                return Err(Error::InvalidState(format!("{name} has {} samples, grid has {n}", f.len())));
            }
        }
        self.as_state().validate()?;
        if let Some(i) = self.z0.iter().position(|&x| x > 1.0) {
            return Err(Error::InvalidState(format!("z0[{i}] = {} exceeds 1", self.z0[i])));
        }
        Ok(())
    }

    pub fn as_state(&self) -> FieldState {
        FieldState {
            t: 0.0,
            v: self.v0.clone(),
            u: self.u0.clone(),
            theta: self.theta0.clone(),
            z: self.z0.clone(),
            v_jumps: self.v_jumps.clone(),
        }
    }

    pub fn from_state(grid: GridSpec, s: &FieldState) -> Self {
        InitialData {
            grid,
            v0: s.v.clone(),
            u0: s.u.clone(),
            theta0: s.theta.clone(),
            z0: s.z.clone(),
            v_jumps: s.v_jumps.clone(),
        }
    }
}

/// The smallness sum as written, and its perturbation part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    /// ||v0-1||_1 + ||v0||_BV + ||u0||_1 + ||u0||_BV + ||theta0-1||_1 + ||theta0||_BV + ||z0||_1 + ||z0||_BV.
    /// Equals 2 at equilibrium because the BV norm carries the sup norm.
    pub total: f64,
    /// Same sum with v0-1 and theta0-1 in the BV slots; zero at equilibrium.
    pub perturbation: f64,
}

pub fn smallness_measure(data: &InitialData) -> Smallness {
    let g = &data.grid;
    let dx = g.dx();
    let dv: Vec<f64> = data.v0.iter().map(|v| v - 1.0).collect();
    let dth: Vec<f64> = data.theta0.iter().map(|t| t - 1.0).collect();
    let bv = |f: &[f64], jumps: &[Jump]| norms::bv_norm(f, g, jumps).bv_total;
    let common = norms::l1(&dv, dx)
        + norms::l1(&data.u0, dx)
        + bv(&data.u0, &[])
        + norms::l1(&dth, dx)
        + norms::l1(&data.z0, dx)
        + bv(&data.z0, &[]);
    Smallness {
        total: common + bv(&data.v0, &data.v_jumps) + bv(&data.theta0, &[]),
        perturbation: common + bv(&dv, &data.v_jumps) + bv(&dth, &[]),
    }
}
