//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! PASS/FAIL line before asserting.

use std::time::Instant;

use combustion_ns::diagnostics::norms::linf;
use combustion_ns::diagnostics::{decay_fit, log_spaced, mass_ledger, stability_probe};
use combustion_ns::heatkernel::{gaussian_envelope_fit, solve_kernel, ConductivityField, ConductivityProfile, KernelOptions};
use combustion_ns::params::{
    default_parameters, equilibrium, smallness_measure, GasParameters, GridSpec, InitialData, Jump, ReactionRate,
};
use combustion_ns::solver::{
    max_l1_gap, reference_solve, run_picard, InitialProfile, Model, PicardSettings, Profile, ReferenceSettings,
};
use combustion_ns::spectral::approx::{expansion_tables, scaled_approx_error};
use combustion_ns::spectral::eigen::logspace;
use combustion_ns::spectral::matrices::CMat4;
use combustion_ns::spectral::modes::max_entry_diff;
use combustion_ns::spectral::physical::sup_norm;
use combustion_ns::spectral::{
    approx_eigenvalues, assemble_linearization, choose_k, eigenvalues_at, greens_fourier, greens_physical,
    longwave_matrices, mode_matrices, singular_mode_matrices, split_singular_regular, KSearch, C64,
};

fn report(n: usize, ok: bool, detail: String) {
    println!("criterion {n:>2}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn ramp(theta_ig: f64) -> Model {
    Model::new(default_parameters(), ReactionRate::IgnitionRamp { theta_ig, width: 1.0 })
}

#[test]
fn criterion_01_eigenvalue_exactness() {
    let p = default_parameters();
    let sm = assemble_linearization(&equilibrium(&p), &p);
    let start = Instant::now();
    let mut worst_l4 = 0.0f64;
    let mut worst_res = 0.0f64;
    for eta in logspace(1e-3, 1e3, 200) {
        let es = eigenvalues_at(eta, &sm).unwrap();
        let exact = -p.diff * eta * eta;
        worst_l4 = worst_l4.max((es.lambdas[3] - C64::new(exact, 0.0)).norm() / exact.abs());
        worst_res = worst_res.max(es.residuals.iter().cloned().fold(0.0, f64::max));
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        worst_l4 <= 1e-12 && worst_res <= 1e-10 && elapsed < 1.0,
        format!("lambda4 rel err {worst_l4:.2e}, max residual {worst_res:.2e}, {elapsed:.3} s"),
    );
}

#[test]
fn criterion_02_asymptotics() {
    let p = default_parameters();
    let lp = equilibrium(&p);
    let sm = assemble_linearization(&lp, &p);
    let mut low = 0.0f64;
    for eta in logspace(1e-4, 1e-2, 30) {
        let es = eigenvalues_at(eta, &sm).unwrap();
        let d = (es.lambdas[1] + C64::new(0.0, eta * lp.sound_speed)).norm();
        low = low.max(d / (eta * eta));
    }
    let limit = lp.v_bar * lp.p_v / p.mu;
    let fit = |grid: Vec<f64>| {
        grid.iter()
            .map(|&eta| {
                let es = eigenvalues_at(eta, &sm).unwrap();
                (es.lambdas[0] - C64::new(limit, 0.0)).norm() * eta * eta
            })
            .fold(0.0, f64::max)
    };
    let split = (20.0f64 * 200.0).sqrt();
    let (c_lo, c_hi) = (fit(logspace(20.0, split, 20)), fit(logspace(split, 200.0, 20)));
    let stable = c_lo.max(c_hi) <= 2.0 * c_lo.min(c_hi);
    report(
        2,
        low <= 5.0 && stable && c_lo.is_finite(),
        format!("low-frequency |l2 + i eta c_s|/eta^2 <= {low:.3}; high-frequency C = {c_lo:.4} / {c_hi:.4}"),
    );
}

#[test]
fn criterion_03_approximation_order() {
    let p = default_parameters();
    let lp = equilibrium(&p);
    let ks = choose_k(&lp, &p, &KSearch::default()).unwrap().ks;
    let split = (10.0f64 * 200.0).sqrt();
    let half = |grid: Vec<f64>| {
        grid.iter().fold([0.0f64; 3], |acc, &eta| {
            let e = scaled_approx_error(eta, &lp, &p, ks).unwrap();
            [acc[0].max(e[0]), acc[1].max(e[1]), acc[2].max(e[2])]
        })
    };
    let lo = half(logspace(10.0, split, 25));
    let hi = half(logspace(split, 200.0, 25));
    let ok = (0..3).all(|j| {
        lo[j].is_finite() && hi[j].is_finite() && lo[j].max(hi[j]) <= 4.0 * lo[j].min(hi[j]).max(f64::MIN_POSITIVE)
    });
    report(3, ok, format!("max |l* - l| eta^8 per branch: low half {}, high half {}", sci(&lo), sci(&hi)));
}

#[test]
fn criterion_04_ordering() {
    let ordered = |p: &GasParameters| {
        let sm = assemble_linearization(&equilibrium(p), p);
        let mut gap24 = true;
        let mut rest = true;
        for eta in logspace(10.0, 1e3, 200) {
            let l = eigenvalues_at(eta, &sm).unwrap().lambdas.map(|z| z.re);
            rest &= 0.0 > l[0] && l[0] > l[1] && l[3] > l[2];
            gap24 &= l[1] > l[3];
        }
        (rest, gap24)
    };
    let p = default_parameters();
    let (rest, gap) = ordered(&p);
    let control = GasParameters { diff: p.mu / 1.5, ..p };
    let (_, control_gap) = ordered(&control);
    report(
        4,
        p.well_ordered() && rest && gap && !control_gap,
        format!("defaults ordered: {}; mu/D = 1.5 keeps the l2/l4 gap: {control_gap}", rest && gap),
    );
}

/// Classical RK4 for G' = A G, G(0) = I, with |step * lambda_max| <= 0.02.
fn rk4_greens(a: &CMat4, t: f64) -> CMat4 {
    let scale = a.iter().map(|z| z.norm()).sum::<f64>().max(1.0);
    let steps = ((t * scale / 0.02).ceil() as usize).max(200);
    let h = C64::new(t / steps as f64, 0.0);
    let half = C64::new(0.5, 0.0);
    let sixth = C64::new(1.0 / 6.0, 0.0);
    let mut g = CMat4::identity();
    for _ in 0..steps {
        let k1 = a * g;
        let k2 = a * (g + k1 * h * half);
        let k3 = a * (g + k2 * h * half);
        let k4 = a * (g + k3 * h);
        g += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * h * sixth;
    }
    g
}

#[test]
fn criterion_05_greens_function_oracle() {
    let p = default_parameters();
    let lp = equilibrium(&p);
    let sm = assemble_linearization(&lp, &p);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for eta in logspace(1e-2, 30.0, 20) {
        for k in 1..=10 {
            let t = 0.2 * k as f64;
            let g = greens_fourier(eta, t, &sm).g;
            worst = worst.max(max_entry_diff(&g, &rk4_greens(&sm.generator(eta), t)));
        }
    }
    let grid = GridSpec::periodic(16.0, 2048).unwrap();
    let mut moment = 0.0f64;
    for t in [0.1, 0.2] {
        let slice = greens_physical(t, &grid, &lp, &p).unwrap();
        moment = moment.max((slice.zeroth_moment - nalgebra::Matrix4::identity()).amax());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        worst <= 1e-8 && moment <= 1e-8 && elapsed < 30.0,
        format!("mode sum vs RK4 {worst:.2e}, zeroth moment - I {moment:.2e}, {elapsed:.1} s"),
    );
}

#[test]
fn criterion_06_singular_regular_split() {
    let p = default_parameters();
    let lp = equilibrium(&p);
    let ks = choose_k(&lp, &p, &KSearch::default()).unwrap().ks;
    let grid = GridSpec::periodic(16.0, 2048).unwrap();
    let mut cs = Vec::new();
    let mut row4 = 0.0f64;
    let mut mode4 = 0.0f64;
    for t in [0.05, 0.1, 0.2] {
        let split = split_singular_regular(t, &grid, &lp, &p, ks).unwrap();
        cs.push(sup_norm(&split.regular) / t);
        row4 = row4.max(split.row4_max);
        mode4 = mode4.max(split.mode4_max);
    }
    let (cmin, cmax) = cs.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    report(
        6,
        cmax <= 2.0 * cmin && row4 <= 1e-9 && mode4 <= 1e-9,
        format!("sup|G_reg|/t = {cs:.4?}; row 4 {row4:.1e}; reactant direction {mode4:.1e}"),
    );
}

#[test]
fn criterion_07_heat_kernel() {
    let opts = KernelOptions::default();
    let grid = GridSpec::periodic(4.0, 2048).unwrap();
    let sol = solve_kernel(&ConductivityField::constant(1.0), 0.0, 0.0, 0.1, &grid, &opts).unwrap();
    let y = grid.centers()[grid.cell_of(0.0)];
    let exact = |x: f64| (-(x - y).powi(2) / 0.4).exp() / (0.4 * std::f64::consts::PI).sqrt();
    let l1: f64 = sol.x.iter().zip(&sol.h).map(|(&x, &h)| (h - exact(x)).abs()).sum::<f64>() * grid.dx();

    // total variation 0.06 from the bump plus 0.04 from the two jumps
    let grid_bv = GridSpec::periodic(6.0, 1024).unwrap();
    let f = ConductivityField {
        mean: 1.0,
        profile: ConductivityProfile::Bump { amplitude: 0.03, width: 1.0 },
        jumps: vec![Jump { position: -0.7, size: 0.02 }, Jump { position: 1.3, size: -0.02 }],
    };
    let mut mass_err = (sol.mass() - 1.0).abs();
    let mut nonneg = sol.h.iter().all(|&h| h >= 0.0);
    let mut envelopes = Vec::new();
    for (y, t1) in [(0.0, 0.1), (-0.7, 0.25), (1.0, 0.4)] {
        let s = solve_kernel(&f, y, 0.0, t1, &grid_bv, &opts).unwrap();
        mass_err = mass_err.max((s.mass() - 1.0).abs());
        nonneg &= s.h.iter().all(|&h| h >= 0.0);
        envelopes.push(gaussian_envelope_fit(&s).unwrap());
    }
    let env_ok = envelopes.iter().all(|c| c.is_finite() && *c <= 10.0);
    report(
        7,
        mass_err <= 1e-10 && nonneg && l1 <= 0.01 && env_ok,
        format!("mass err {mass_err:.1e}, nonnegative {nonneg}, L1 err {l1:.2e}, envelope C* {envelopes:.3?}"),
    );
}

#[test]
fn criterion_08_picard_contraction() {
    let model = ramp(0.5);
    let grid = GridSpec::periodic(8.0, 512).unwrap();
    let data = InitialProfile::default().build_scaled(&grid, 0.02).unwrap();
    let settings = PicardSettings { t_sharp: 0.1, ..PicardSettings::default() };
    let start = Instant::now();
    let (traj, rep) = run_picard(&data, &model, &settings).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let reference = reference_solve(
        &data,
        &model,
        &ReferenceSettings { every_step: true, dt_max: settings.dt, ..ReferenceSettings::new(settings.t_sharp) },
    )
    .unwrap();
    let gap = max_l1_gap(&traj, &reference);
    let decreasing = rep.values.windows(2).all(|w| w[1] < w[0]);
    report(
        8,
        rep.values.len() >= 5 && rep.max_ratio < 1.0 && decreasing && rep.converged && gap <= 5e-4 && elapsed < 120.0,
        format!(
            "{} iterates, max ratio {:.3}, L1 gap to reference {gap:.2e}, {elapsed:.1} s",
            rep.values.len(),
            rep.max_ratio
        ),
    );
}

#[test]
fn criterion_09_reactant_physics() {
    let model = ramp(0.5);
    let grid = GridSpec::periodic(64.0, 1024).unwrap();
    let data = InitialProfile::default().build_scaled(&grid, 0.02).unwrap();
    let settings = ReferenceSettings {
        output_times: (1..500).map(|k| k as f64 * 0.1).collect(),
        dt_max: 0.02,
        ..ReferenceSettings::new(50.0)
    };
    let traj = reference_solve(&data, &model, &settings).unwrap();
    let nu0 = 0.1;
    let led = mass_ledger(&traj, &model, nu0);
    let monotone = led.burn_rate_monotone(1e-14);
    report(
        9,
        led.balance_error <= 1e-8 && monotone && led.weighted_burn_sup.is_finite(),
        format!(
            "balance {:.1e}, M nonincreasing after {nu0}: {monotone}, sup (1+t) M = {:.3e}",
            led.balance_error, led.weighted_burn_sup
        ),
    );
}

#[test]
fn criterion_10_decay_rates() {
    // ignition above every reached temperature, so the reaction never starts
    let model = ramp(2.0);
    let grid = GridSpec::periodic(160.0, 4096).unwrap();
    let data = InitialProfile::default().build_scaled(&grid, 0.02).unwrap();
    let times = log_spaced(10.0, 100.0, 16);
    let settings = ReferenceSettings { output_times: times, dt_max: 0.05, ..ReferenceSettings::new(100.0) };
    let start = Instant::now();
    let traj = reference_solve(&data, &model, &settings).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let late: Vec<_> = traj.snapshots.iter().filter(|s| s.state.t >= 10.0 - 1e-9).collect();
    let ts: Vec<f64> = late.iter().map(|s| s.state.t).collect();
    let sup = |f: &dyn Fn(&combustion_ns::params::FieldState) -> Vec<f64>| -> Vec<f64> {
        late.iter().map(|s| linf(&f(&s.state))).collect()
    };
    let u = sup(&|s| s.u.clone());
    let th = sup(&|s| s.theta.iter().map(|x| x - 1.0).collect());
    let z = sup(&|s| s.z.clone());
    let rates: Vec<f64> = [u, th, z].iter().map(|f| decay_fit(&ts, f).unwrap().exponent).collect();
    report(
        10,
        rates.iter().all(|r| (-0.65..=-0.35).contains(r)) && elapsed < 600.0,
        format!("sup-norm decay exponents u, theta-1, z = {rates:.3?}, {elapsed:.1} s"),
    );
}

/// Base data plus eps times a fixed mixed perturbation of all four fields.
fn perturbed(grid: &GridSpec, base: f64, eps: f64) -> InitialData {
    let direction = InitialProfile {
        v: Profile::Gaussian { amplitude: 1.0, center: 1.0, width: 0.7 },
        u: Profile::Gaussian { amplitude: -1.0, center: -1.0, width: 0.5 },
        theta: Profile::Dipole { amplitude: 1.0, center: 0.0, width: 1.0 },
        z: Profile::Gaussian { amplitude: 1.0, center: 0.5, width: 1.5 },
        v_jumps: vec![],
    };
    direction.scaled(eps).superpose(&InitialProfile::default().build_scaled(grid, base).unwrap()).unwrap()
}

#[test]
fn criterion_11_stability_probe() {
    let model = ramp(0.5);
    let grid = GridSpec::periodic(8.0, 256).unwrap();
    let settings = ReferenceSettings {
        output_times: (1..20).map(|k| k as f64 * 0.05).collect(),
        dt_max: 1e-3,
        ..ReferenceSettings::new(1.0)
    };
    let eps = 4e-4;
    let pairs = [(0.01, 1.0, 2.0), (0.01, 1.0, 3.0), (0.02, 1.0, 2.0), (0.02, 1.0, 3.0)];
    let mut constants = Vec::new();
    let mut max_hat = 0.0f64;
    for (base, a, b) in pairs {
        let da = perturbed(&grid, base, a * eps);
        let db = perturbed(&grid, base, b * eps);
        max_hat = max_hat.max(smallness_measure(&da).perturbation).max(smallness_measure(&db).perturbation);
        constants.push(stability_probe(&da, &db, &model, &settings).unwrap().fitted_constant);
    }
    let fitted = constants.iter().cloned().fold(0.0, f64::max);
    let lowest = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        11,
        max_hat <= 0.05 && fitted <= 2.0 * lowest && fitted.is_finite(),
        format!("per-pair constants {constants:.4?}, max delta_hat {max_hat:.3}"),
    );
}

#[test]
fn criterion_12_closed_form_tables() {
    let p = default_parameters();
    let lp = equilibrium(&p);
    let sm = assemble_linearization(&lp, &p);
    let lw = longwave_matrices(&lp, &p).unwrap();
    // Re M_j(eta) = M_j^0 + O(eta^2); Richardson on two small frequencies
    let re_modes = |eta: f64| mode_matrices(&eigenvalues_at(eta, &sm).unwrap(), &sm).m_hat.map(|m| m.map(|z| z.re));
    let (a, b) = (re_modes(4e-3), re_modes(2e-3));
    let mut worst = 0.0f64;
    for j in 0..3 {
        let limit = (b[j] * 4.0 - a[j]) / 3.0;
        worst = worst.max((limit - lw.m0[j]).amax());
    }
    let tables = expansion_tables(&lp, &p);
    let mut diag = nalgebra::Matrix4::zeros();
    diag[(0, 0)] = 1.0;
    let m1_ok = tables[0][0] == diag;
    let ks = choose_k(&lp, &p, &KSearch::default()).unwrap().ks;
    let residuals: Vec<f64> = [10.0, 20.0, 40.0, 80.0, 160.0]
        .iter()
        .map(|&eta| {
            let ae = approx_eigenvalues(eta, &lp, &p, ks);
            singular_mode_matrices(eta, &ae, &sm).column4_residual(p.heat_q).iter().cloned().fold(0.0, f64::max)
        })
        .collect();
    // rate at least eta^-1: doubling eta at least halves the residual until it hits round-off
    let decays = residuals.windows(2).all(|w| w[1] <= 0.5 * w[0] || w[1] <= 1e-14);
    report(
        12,
        worst <= 1e-6 && m1_ok && decays,
        format!("M_j^0 vs small-eta limit {worst:.1e}; M_1^(*,0) = diag(1,0,0,0): {m1_ok}; column-4 residuals {}", sci(&residuals)),
    );
}
