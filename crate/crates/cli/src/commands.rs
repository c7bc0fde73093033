//! One function per subcommand. Each writes into its run directory and
//! returns typed errors; exit codes are assigned in main.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use combustion_ns::diagnostics::norms::{bv_norm, linf};
use combustion_ns::diagnostics::{decay_fit, mass_ledger, script_g_of_state, stability_probe};
use combustion_ns::heatkernel::{conductivity_report, gaussian_envelope_fit, kernel_derivative, solve_kernel};
use combustion_ns::params::{equilibrium, smallness_measure, FieldState, GridSpec, InitialData};
use combustion_ns::solver::{
    continue_solution, l1_distance, reference_solve, run_picard, ContractionReport, InitialProfile, Model, Profile,
    ReferenceSettings, Snapshot, Trajectory,
};
use combustion_ns::spectral::eigen::logspace;
use combustion_ns::spectral::physical::sup_norm;
use combustion_ns::spectral::{
    assemble_linearization, branch_track, choose_k, eigenvalues_at, greens_physical, spectral_gap_scan,
    split_singular_regular, GreensPhysicalSlice,
};

use crate::config::{RunConfig, SolveMode};
use crate::error::CliError;
use crate::output::{Csv, RunDir};

fn model(cfg: &RunConfig) -> Model {
    Model::new(cfg.parameters, cfg.reaction)
}

pub fn initial_data(cfg: &RunConfig) -> Result<InitialData, CliError> {
    let profile = &cfg.initial_data.profile;
    Ok(match cfg.initial_data.delta_hat {
        Some(d) => profile.build_scaled(&cfg.grid, d)?,
        None => profile.build(&cfg.grid)?,
    })
}

fn rows(m: &nalgebra::Matrix4<f64>) -> [[f64; 4]; 4] {
    std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]))
}

pub fn spectrum(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let p = &cfg.parameters;
    let lp = equilibrium(p);
    let sm = assemble_linearization(&lp, p);
    let sp = &cfg.spectral;
    let grid = logspace(sp.eta_min, sp.eta_max, sp.eta_count);
    let sets = grid.par_iter().map(|&eta| eigenvalues_at(eta, &sm)).collect::<Result<Vec<_>, _>>()?;
    let mut csv = Csv::new(&["eta", "re_l1", "im_l1", "re_l2", "im_l2", "re_l3", "im_l3", "re_l4", "im_l4", "gap"]);
    for es in &sets {
        let l = es.lambdas;
        csv.row(&[
            es.eta,
            l[0].re,
            l[0].im,
            l[1].re,
            l[1].im,
            l[2].re,
            l[2].im,
            l[3].re,
            l[3].im,
            -es.max_real_part(),
        ]);
    }
    dir.write_csv("spectrum.csv", csv)?;

    let track = branch_track(&grid, &sm)?;
    let gap = spectral_gap_scan(sp.eta_min, sp.eta_max, &sm, sp.eta_count)?;
    let k_choice = match choose_k(&lp, p, &sp.k_search) {
        Ok(k) => json!({ "ks": k.ks, "sigma0_star": k.sigma0_star, "sigma1_star": k.sigma1_star, "eta_lo": k.eta_lo }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let max_residual = sets.iter().flat_map(|s| s.residuals).fold(0.0, f64::max);
    dir.write_json(
        "spectrum.json",
        &json!({
            "prandtl": p.prandtl(),
            "lewis": p.lewis(),
            "well_ordered": p.well_ordered(),
            "sound_speed": lp.sound_speed,
            "max_root_residual": max_residual,
            "regime_switches": track.regime_switches,
            "ambiguity_warnings": track.warnings,
            "gap": gap,
            "k_choice": k_choice,
        }),
    )
}

fn greens_csv(slice: &GreensPhysicalSlice) -> Csv {
    let mut header = vec!["x".to_string()];
    for r in 1..=4 {
        for c in 1..=4 {
            header.push(format!("g{r}{c}"));
        }
    }
    let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = Csv::new(&header);
    for (x, g) in slice.x.iter().zip(&slice.g) {
        let mut row = vec![*x];
        for r in 0..4 {
            for c in 0..4 {
                row.push(g[(r, c)]);
            }
        }
        csv.row(&row);
    }
    csv
}

pub fn greens(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let p = &cfg.parameters;
    let lp = equilibrium(p);
    let sp = &cfg.spectral;
    let grid = &sp.greens_grid;
    let ks = if sp.split { Some(choose_k(&lp, p, &sp.k_search)?.ks) } else { None };
    let results = sp
        .times
        .par_iter()
        .map(|&t| {
            let full = greens_physical(t, grid, &lp, p)?;
            let split = ks.map(|ks| split_singular_regular(t, grid, &lp, p, ks)).transpose()?;
            Ok((full, split))
        })
        .collect::<Result<Vec<_>, combustion_ns::Error>>()?;
    for (k, (full, split)) in results.into_iter().enumerate() {
        dir.write_csv(&format!("greens_t{k}.csv"), greens_csv(&full))?;
        let mut meta = json!({
            "t": full.t,
            "delta_rate": full.delta_rate,
            "delta_coefficient": rows(&full.delta_coefficient),
            "gaussian_widths": full.gaussian_widths,
            "imag_residue": full.imag_residue,
            "zeroth_moment": rows(&full.zeroth_moment),
        });
        if let Some(s) = split {
            dir.write_csv(&format!("greens_regular_t{k}.csv"), greens_csv(&s.regular))?;
            let sup = sup_norm(&s.regular);
            meta["split"] = json!({
                "ks": ks,
                "sup_regular": sup,
                "sup_regular_over_t": sup / full.t,
                "row4_max": s.row4_max,
                "mode4_max": s.mode4_max,
                "column4_max": s.column4_max,
            });
        }
        dir.write_json(&format!("greens_t{k}.json"), &meta)?;
    }
    Ok(())
}

pub fn kernel(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let k = &cfg.kernel;
    let sol = solve_kernel(&k.conductivity, k.source, k.t0, k.t1, &k.grid, &k.options)?;
    let hx = kernel_derivative(&sol);
    let mut csv = Csv::new(&["x", "H", "Hx"]);
    for i in 0..sol.x.len() {
        csv.row(&[sol.x[i], sol.h[i], hx[i]]);
    }
    dir.write_csv("kernel.csv", csv)?;
    let envelope = match gaussian_envelope_fit(&sol) {
        Ok(c) => json!(c),
        Err(e) => json!({ "error": e.to_string() }),
    };
    dir.write_json(
        "kernel.json",
        &json!({
            "mass": sol.mass(),
            "dt": sol.dt,
            "steps": sol.steps,
            "min_h": sol.h.iter().cloned().fold(f64::INFINITY, f64::min),
            "envelope_c": envelope,
            "conductivity": conductivity_report(&k.conductivity, &k.grid, k.t0),
        }),
    )
}

/// Snapshots at multiples of `every` (all when every == 0), plus the last one.
fn subsample(traj: &Trajectory, every: f64, t_end: f64) -> Trajectory {
    let tol = 1e-9;
    let mut snapshots: Vec<Snapshot> = traj
        .snapshots
        .iter()
        .filter(|s| s.state.t <= t_end + tol)
        .filter(|s| every == 0.0 || ((s.state.t / every) - (s.state.t / every).round()).abs() < tol * (1.0 + s.state.t / every))
        .cloned()
        .collect();
    if let Some(last) = traj.snapshots.iter().filter(|s| s.state.t <= t_end + tol).last() {
        if snapshots.last().map(|s| s.state.t) != Some(last.state.t) {
            snapshots.push(last.clone());
        }
    }
    Trajectory { grid: traj.grid, snapshots }
}

fn write_trajectory(dir: &mut RunDir, name: &str, traj: &Trajectory) -> Result<(), CliError> {
    let xc = traj.grid.centers();
    let xn = traj.grid.nodes();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let s = &snap.state;
        let mut csv = Csv::new(&["x_cell", "x_node", "v", "u", "theta", "z"]);
        for i in 0..s.len() {
            csv.row(&[xc[i], xn[i], s.v[i], s.u[i], s.theta[i], s.z[i]]);
        }
        dir.write_csv(&format!("{name}/fields_{k:05}.csv"), csv)?;
    }
    dir.write_json(&format!("{name}/trajectory.json"), traj)
}

fn reference_settings(cfg: &RunConfig, t_end: f64, every: f64) -> ReferenceSettings {
    let output_times = if every > 0.0 { (1..).map(|k| k as f64 * every).take_while(|t| *t < t_end).collect() } else { vec![] };
    ReferenceSettings { t_end, cfl: cfg.solver.cfl, dt_max: cfg.solver.dt_max, output_times, every_step: every == 0.0 }
}

fn picard_run(cfg: &RunConfig, data: &InitialData, t_end: f64) -> Result<(Trajectory, Vec<ContractionReport>), CliError> {
    let m = model(cfg);
    let settings = cfg.solver.picard();
    let (traj, first) = run_picard(data, &m, &settings)?;
    let mut reports = vec![first];
    let traj = if t_end > settings.t_sharp {
        let (t, more) = continue_solution(&traj, t_end, &m, &settings, cfg.solver.continuation_delta)?;
        reports.extend(more);
        t
    } else {
        traj
    };
    Ok((traj, reports))
}

pub fn solve(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let data = initial_data(cfg)?;
    let s = &cfg.solver;
    let every = s.snapshot_every;
    let smallness = smallness_measure(&data);
    let run_p = || picard_run(cfg, &data, s.t_end);
    let run_r = || reference_solve(&data, &model(cfg), &reference_settings(cfg, s.t_end, every)).map_err(CliError::from);
    let (picard, reference) = match s.mode {
        SolveMode::Picard => (Some(run_p()?), None),
        SolveMode::Reference => (None, Some(run_r()?)),
        SolveMode::Both => {
            let (a, b) = rayon::join(run_p, run_r);
            (Some(a?), Some(b?))
        }
    };
    let mut picard_out = None;
    if let Some((traj, reports)) = picard {
        let traj = subsample(&traj, every, s.t_end);
        write_trajectory(dir, "picard", &traj)?;
        dir.write_json("picard/summary.json", &json!({ "smallness": smallness, "contraction": reports, "times": traj.times() }))?;
        picard_out = Some(traj);
    }
    let mut reference_out = None;
    if let Some(traj) = reference {
        let traj = subsample(&traj, every, s.t_end);
        write_trajectory(dir, "reference", &traj)?;
        dir.write_json(
            "reference/summary.json",
            &json!({ "smallness": smallness, "times": traj.times(), "cumulative_burn": traj.last().cumulative_burn }),
        )?;
        reference_out = Some(traj);
    }
    if let (Some(a), Some(b)) = (&picard_out, &reference_out) {
        let dx = a.grid.dx();
        let mut per_time = Vec::new();
        for sa in &a.snapshots {
            if let Some(sb) = b.snapshots.iter().find(|sb| (sb.state.t - sa.state.t).abs() <= 1e-9) {
                per_time.push(json!({ "t": sa.state.t, "l1": l1_distance(&sa.state, &sb.state, dx) }));
            }
        }
        let max = per_time.iter().filter_map(|v| v["l1"].as_f64()).fold(0.0, f64::max);
        dir.write_json("comparison.json", &json!({ "max_l1_gap": max, "matched_times": per_time.len(), "per_time": per_time }))?;
    }
    Ok(())
}

/// Trajectories written by `solve` below `run`, as (name, trajectory).
fn load_trajectories(run: &Path) -> Result<Vec<(String, Trajectory)>, CliError> {
    let read = |p: PathBuf| -> Result<Trajectory, CliError> {
        let text = std::fs::read_to_string(&p).map_err(|source| CliError::Io { path: p.clone(), source })?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema { pointer: "/".into(), message: format!("{}: {e}", p.display()) })
    };
    if run.join("trajectory.json").exists() {
        let name = run.file_name().map_or("trajectory".into(), |n| n.to_string_lossy().into_owned());
        return Ok(vec![(name, read(run.join("trajectory.json"))?)]);
    }
    let mut out = Vec::new();
    for name in ["picard", "reference"] {
        let p = run.join(name).join("trajectory.json");
        if p.exists() {
            out.push((name.to_string(), read(p)?));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("no trajectory.json under {}", run.display())));
    }
    Ok(out)
}

fn deviation(f: &[f64], shift: f64) -> Vec<f64> {
    f.iter().map(|x| x - shift).collect()
}

fn diag_one(cfg: &RunConfig, dir: &mut RunDir, name: &str, traj: &Trajectory) -> Result<(), CliError> {
    let grid = &traj.grid;
    let mut norms = Csv::new(&[
        "t", "l1_v", "sup_v", "bv_v", "l1_u", "sup_u", "bv_u", "l1_theta", "sup_theta", "bv_theta", "l1_z", "sup_z", "bv_z",
        "script_g",
    ]);
    for snap in &traj.snapshots {
        let s: &FieldState = &snap.state;
        let mut row = vec![s.t];
        let fields = [(deviation(&s.v, 1.0), &s.v_jumps[..]), (s.u.clone(), &[][..]), (deviation(&s.theta, 1.0), &[][..]), (s.z.clone(), &[][..])];
        for (f, jumps) in &fields {
            let r = bv_norm(f, grid, jumps);
            row.extend([r.l1, r.linf, r.bv_total]);
        }
        row.push(script_g_of_state(s, grid));
        norms.row(&row);
    }
    dir.write_csv(&format!("{name}/norms.csv"), norms)?;

    let led = mass_ledger(traj, &model(cfg), cfg.diagnostics.nu0);
    let mut csv = Csv::new(&["t", "mass", "burn_rate", "cumulative_burn"]);
    for k in 0..led.times.len() {
        csv.row(&[led.times[k], led.mass[k], led.burn_rate[k], led.cumulative[k]]);
    }
    dir.write_csv(&format!("{name}/ledger.csv"), csv)?;
    dir.write_json(
        &format!("{name}/ledger.json"),
        &json!({
            "nu0": led.nu0,
            "balance_error": led.balance_error,
            "mass_increase": led.mass_increase,
            "burn_rate_increase": led.burn_rate_increase,
            "weighted_burn_sup": led.weighted_burn_sup,
        }),
    )?;

    let [lo, hi] = cfg.diagnostics.decay_window;
    let window: Vec<&Snapshot> = traj.snapshots.iter().filter(|s| s.state.t >= lo && s.state.t <= hi).collect();
    let ts: Vec<f64> = window.iter().map(|s| s.state.t).collect();
    let fit = |f: &dyn Fn(&FieldState) -> f64| {
        let vals: Vec<f64> = window.iter().map(|s| f(&s.state)).collect();
        match decay_fit(&ts, &vals) {
            Ok(d) => serde_json::to_value(d).expect("fit serializes"),
            Err(e) => json!({ "error": e.to_string() }),
        }
    };
    dir.write_json(
        &format!("{name}/decay.json"),
        &json!({
            "window": [lo, hi],
            "u": fit(&|s| linf(&s.u)),
            "theta": fit(&|s| linf(&deviation(&s.theta, 1.0))),
            "z": fit(&|s| linf(&s.z)),
        }),
    )
}

pub fn diag(cfg: &RunConfig, run: Option<&Path>, dir: &mut RunDir) -> Result<(), CliError> {
    let trajectories = match run {
        Some(path) => load_trajectories(path)?,
        None => {
            let data = initial_data(cfg)?;
            let s = &cfg.solver;
            let traj = reference_solve(&data, &model(cfg), &reference_settings(cfg, s.t_end, s.snapshot_every))?;
            vec![("reference".to_string(), traj)]
        }
    };
    for (name, traj) in &trajectories {
        diag_one(cfg, dir, name, traj)?;
    }
    Ok(())
}

/// Random smooth directions: one Gaussian per field, z kept nonnegative.
fn random_directions(count: usize, seed: u64, grid: &GridSpec) -> Vec<InitialProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 0.25 * grid.half_width;
    let bump = |rng: &mut ChaCha8Rng, signed: bool| {
        let amplitude = if signed { rng.gen_range(-1.0..1.0) } else { rng.gen_range(0.0..1.0) };
        Profile::Gaussian { amplitude, center: rng.gen_range(-reach..reach), width: rng.gen_range(0.5..1.5) }
    };
    (0..count)
        .map(|_| InitialProfile {
            v: bump(&mut rng, true),
            u: bump(&mut rng, true),
            theta: bump(&mut rng, true),
            z: bump(&mut rng, false),
            v_jumps: vec![],
        })
        .collect()
}

#[derive(Serialize)]
struct ProbeSummary {
    direction: usize,
    pair: usize,
    eps: [f64; 2],
    delta_hat: [f64; 2],
    denominator: f64,
    fitted_constant: f64,
}

pub fn stability(cfg: &RunConfig, dir: &mut RunDir) -> Result<(), CliError> {
    let st = &cfg.stability;
    let base = initial_data(cfg)?;
    let mut directions = st.directions.clone();
    directions.extend(random_directions(st.random_directions, cfg.seed, &cfg.grid));
    if directions.is_empty() || st.pairs.is_empty() {
        return Err(CliError::Usage("stability needs at least one direction and one amplitude pair".into()));
    }
    let settings = ReferenceSettings {
        t_end: st.t_end,
        cfl: cfg.solver.cfl,
        dt_max: st.dt_max,
        output_times: (1..).map(|k| k as f64 * st.output_every).take_while(|t| *t < st.t_end).collect(),
        every_step: false,
    };
    let jobs: Vec<(usize, usize)> =
        (0..directions.len()).flat_map(|d| (0..st.pairs.len()).map(move |p| (d, p))).collect();
    let m = model(cfg);
    let results = jobs
        .par_iter()
        .map(|&(d, p)| {
            let [ea, eb] = st.pairs[p];
            let a = directions[d].scaled(ea).superpose(&base)?;
            let b = directions[d].scaled(eb).superpose(&base)?;
            let report = stability_probe(&a, &b, &m, &settings)?;
            let hats = [smallness_measure(&a).perturbation, smallness_measure(&b).perturbation];
            Ok((d, p, hats, report))
        })
        .collect::<Result<Vec<_>, combustion_ns::Error>>()?;
    let mut csv = Csv::new(&["direction", "pair", "t", "distance", "ratio"]);
    let mut summary = Vec::new();
    for (d, p, hats, rep) in &results {
        for k in 0..rep.times.len() {
            csv.labeled_row(&[*d, *p], &[rep.times[k], rep.distances[k], rep.ratios[k]]);
        }
        summary.push(ProbeSummary {
            direction: *d,
            pair: *p,
            eps: st.pairs[*p],
            delta_hat: *hats,
            denominator: rep.denominator,
            fitted_constant: rep.fitted_constant,
        });
    }
    dir.write_csv("stability.csv", csv)?;
    let hi = summary.iter().map(|s| s.fitted_constant).fold(0.0, f64::max);
    let lo = summary.iter().map(|s| s.fitted_constant).fold(f64::INFINITY, f64::min);
    dir.write_json(
        "stability.json",
        &json!({
            "fitted_constant": hi,
            "smallest_constant": lo,
            "spread": if lo > 0.0 { hi / lo } else { f64::INFINITY },
            "probes": summary,
            "directions": directions,
        }),
    )
}
