//! Run configuration: one JSON file per run, every block optional except
//! that a block, once given, must be complete where noted.

use std::cell::RefCell;
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use serde::de::{self, DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};

use combustion_ns::heatkernel::{ConductivityField, KernelOptions};
use combustion_ns::params::{Boundary, GasParameters, GridSpec, ReactionRate};
use combustion_ns::solver::{InitialProfile, PicardSettings, Profile};
use combustion_ns::spectral::KSearch;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    Picard,
    Reference,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialDataConfig {
    pub profile: InitialProfile,
    /// rescale the profile to this perturbation smallness; None keeps amplitudes as given
    pub delta_hat: Option<f64>,
}

impl Default for InitialDataConfig {
    fn default() -> Self {
        InitialDataConfig { profile: InitialProfile::default(), delta_hat: Some(0.02) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: SolveMode,
    pub t_end: f64,
    /// spacing of written snapshots; 0 writes every stored level
    pub snapshot_every: f64,
    pub t_sharp: f64,
    pub dt: f64,
    pub tol: f64,
    pub n_max: usize,
    pub vacuum_guard: f64,
    /// restart threshold on the stopping-time functional when t_end > t_sharp
    pub continuation_delta: f64,
    pub cfl: f64,
    pub dt_max: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = PicardSettings::default();
        SolverConfig {
            mode: SolveMode::Picard,
            t_end: p.t_sharp,
            snapshot_every: 0.01,
            t_sharp: p.t_sharp,
            dt: p.dt,
            tol: p.tol,
            n_max: p.n_max,
            vacuum_guard: p.vacuum_guard,
            continuation_delta: 1.0,
            cfl: 0.4,
            dt_max: p.dt,
        }
    }
}

impl SolverConfig {
    pub fn picard(&self) -> PicardSettings {
        PicardSettings {
            t_sharp: self.t_sharp,
            dt: self.dt,
            tol: self.tol,
            n_max: self.n_max,
            vacuum_guard: self.vacuum_guard,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta_count: usize,
    /// times at which physical-space Green's functions are written
    pub times: Vec<f64>,
    pub k_search: KSearch,
    pub greens_grid: GridSpec,
    /// also write the singular/regular split
    pub split: bool,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            eta_min: 1e-3,
            eta_max: 1e3,
            eta_count: 200,
            times: vec![0.05, 0.1, 0.2],
            k_search: KSearch::default(),
            greens_grid: GridSpec { half_width: 16.0, cells: 2048, boundary: Boundary::Periodic },
            split: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub conductivity: ConductivityField,
    pub source: f64,
    pub t0: f64,
    pub t1: f64,
    pub grid: GridSpec,
    pub options: KernelOptions,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            conductivity: ConductivityField::constant(1.0),
            source: 0.0,
            t0: 0.0,
            t1: 0.1,
            grid: GridSpec { half_width: 4.0, cells: 1024, boundary: Boundary::Periodic },
            options: KernelOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// cutoff time after which the burn rate must not increase
    pub nu0: f64,
    pub decay_window: [f64; 2],
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig { nu0: 0.1, decay_window: [10.0, 100.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityConfig {
    /// perturbation shapes added to the base data
    pub directions: Vec<InitialProfile>,
    /// extra Gaussian directions drawn from the run seed
    pub random_directions: usize,
    /// amplitude pairs (a, b): the probe compares base + a d with base + b d
    pub pairs: Vec<[f64; 2]>,
    pub t_end: f64,
    pub dt_max: f64,
    pub output_every: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            directions: vec![InitialProfile {
                v: Profile::Gaussian { amplitude: 1.0, center: 1.0, width: 0.7 },
                u: Profile::Gaussian { amplitude: -1.0, center: -1.0, width: 0.5 },
                theta: Profile::Dipole { amplitude: 1.0, center: 0.0, width: 1.0 },
                z: Profile::Gaussian { amplitude: 1.0, center: 0.5, width: 1.5 },
                v_jumps: vec![],
            }],
            random_directions: 0,
            pairs: vec![[4e-4, 8e-4], [4e-4, 1.2e-3]],
            t_end: 1.0,
            dt_max: 1e-3,
            output_every: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub parameters: GasParameters,
    pub reaction: ReactionRate,
    pub grid: GridSpec,
    pub initial_data: InitialDataConfig,
    pub solver: SolverConfig,
    pub spectral: SpectralConfig,
    pub kernel: KernelConfig,
    pub diagnostics: DiagnosticsConfig,
    pub stability: StabilityConfig,
    /// root under which run directories are created
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            parameters: GasParameters::default(),
            reaction: ReactionRate::default(),
            grid: GridSpec { half_width: 8.0, cells: 512, boundary: Boundary::Periodic },
            initial_data: InitialDataConfig::default(),
            solver: SolverConfig::default(),
            spectral: SpectralConfig::default(),
            kernel: KernelConfig::default(),
            diagnostics: DiagnosticsConfig::default(),
            stability: StabilityConfig::default(),
            output_dir: PathBuf::from("runs"),
            seed: 0,
        }
    }
}

/// Escapes one reference token of a JSON pointer.
fn escape_token(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

/// Walks a JSON document and stops at the first key repeated within one object.
struct DuplicateScan {
    pointer: String,
    found: Rc<RefCell<Option<String>>>,
}

impl DuplicateScan {
    fn child(&self, token: &str) -> Self {
        DuplicateScan { pointer: format!("{}/{}", self.pointer, escape_token(token)), found: self.found.clone() }
    }
}

impl<'de> DeserializeSeed<'de> for DuplicateScan {
    type Value = ();

    fn deserialize<D: de::Deserializer<'de>>(self, d: D) -> Result<(), D::Error> {
        d.deserialize_any(self)
    }
}

impl<'de> Visitor<'de> for DuplicateScan {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("any JSON value")
    }

    fn visit_bool<E>(self, _: bool) -> Result<(), E> {
        Ok(())
    }
    fn visit_i64<E>(self, _: i64) -> Result<(), E> {
        Ok(())
    }
    fn visit_u64<E>(self, _: u64) -> Result<(), E> {
        Ok(())
    }
    fn visit_f64<E>(self, _: f64) -> Result<(), E> {
        Ok(())
    }
    fn visit_str<E>(self, _: &str) -> Result<(), E> {
        Ok(())
    }
    fn visit_unit<E>(self) -> Result<(), E> {
        Ok(())
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<(), A::Error> {
        let mut i = 0usize;
        while seq.next_element_seed(self.child(&i.to_string()))?.is_some() {
            i += 1;
        }
        Ok(())
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<(), A::Error> {
        let mut seen = HashSet::new();
        while let Some(key) = map.next_key::<String>()? {
            let child = self.child(&key);
            if !seen.insert(key.clone()) {
                *self.found.borrow_mut() = Some(child.pointer.clone());
                return Err(de::Error::custom(format!("duplicate key `{key}`")));
            }
            map.next_value_seed(child)?;
        }
        Ok(())
    }
}

fn schema(pointer: String, message: impl Into<String>) -> CliError {
    CliError::Schema { pointer, message: message.into() }
}

/// Converts a serde path ("a.b[2].c") plus message into a JSON pointer.
fn pointer_of(path: &serde_path_to_error::Path, message: &str) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape_token(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape_token(variant))),
            Segment::Unknown => {}
        }
    }
    // missing fields are reported at their parent object
    if let Some(rest) = message.strip_prefix("missing field `") {
        if let Some(name) = rest.split('`').next() {
            out.push_str(&format!("/{}", escape_token(name)));
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates a configuration document.
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let found = Rc::new(RefCell::new(None));
    let scan = DuplicateScan { pointer: String::new(), found: found.clone() };
    let mut de = serde_json::Deserializer::from_str(text);
    if let Err(e) = scan.deserialize(&mut de) {
        let pointer = found.borrow().clone().unwrap_or_else(|| "/".into());
        return Err(schema(pointer, e.to_string()));
    }
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let msg = e.inner().to_string();
        schema(pointer_of(e.path(), &msg), msg)
    })?;
    de.end().map_err(|e| schema("/".into(), e.to_string()))?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

/// Range checks that serde cannot express, reported with the offending pointer.
fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let core = |pointer: &str, r: combustion_ns::Result<()>| r.map_err(|e| schema(pointer.into(), e.to_string()));
    core("/parameters", cfg.parameters.validate())?;
    core("/reaction", cfg.reaction.validate())?;
    core("/grid", cfg.grid.validate())?;
    core("/spectral/greens_grid", cfg.spectral.greens_grid.validate())?;
    core("/kernel/grid", cfg.kernel.grid.validate())?;
    core("/kernel/conductivity", cfg.kernel.conductivity.validate())?;
    core("/solver", cfg.solver.picard().validate())?;
    let s = &cfg.solver;
    if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
        return Err(schema("/solver/t_end".into(), "must be finite and >= 0"));
    }
    if !(s.snapshot_every >= 0.0) {
        return Err(schema("/solver/snapshot_every".into(), "must be >= 0"));
    }
    if !(s.cfl > 0.0 && s.dt_max > 0.0) {
        return Err(schema("/solver".into(), "cfl and dt_max must be positive"));
    }
    let sp = &cfg.spectral;
    if !(sp.eta_min > 0.0 && sp.eta_max > sp.eta_min) || sp.eta_count < 2 {
        return Err(schema("/spectral".into(), "need 0 < eta_min < eta_max and eta_count >= 2"));
    }
    if let Some(i) = sp.times.iter().position(|t| !(*t > 0.0)) {
        return Err(schema(format!("/spectral/times/{i}"), "times must be positive"));
    }
    if let Some(d) = cfg.initial_data.delta_hat {
        if !(d > 0.0) {
            return Err(schema("/initial_data/delta_hat".into(), "must be positive"));
        }
    }
    if !(cfg.diagnostics.decay_window[0] > 0.0 && cfg.diagnostics.decay_window[1] > cfg.diagnostics.decay_window[0]) {
        return Err(schema("/diagnostics/decay_window".into(), "need 0 < start < end"));
    }
    let st = &cfg.stability;
    if !(st.t_end > 0.0 && st.dt_max > 0.0 && st.output_every > 0.0) {
        return Err(schema("/stability".into(), "t_end, dt_max and output_every must be positive"));
    }
    if cfg.output_dir.is_absolute() || cfg.output_dir.components().any(|c| c == std::path::Component::ParentDir) {
        return Err(schema("/output_dir".into(), "must be a relative path without `..`"));
    }
    Ok(())
}
