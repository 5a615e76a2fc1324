//! Acceptance suite. Each test prints one `PASS` or `FAIL` line to stderr,
//! bypassing output capture, so the full list shows up in the test log.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;

use coulomb_lab::bogoliubov::dyson::gaussian_initial_profile;
use coulomb_lab::bogoliubov::semiclassical::dispersion_min_scan;
use coulomb_lab::bogoliubov::{bogoliubov_dispersion_min, compute_i0, dyson_pipeline, dyson_variational_solve, fock_oracle, semiclassical_p_integral, DysonGrid, SolverOptions};
use coulomb_lab::cli::{self, continuum_thermo_rows, fock_specs, graf_schenker_suite, lattice_shape_comparison, stability_grid, Command, RunConfig, LT_BOX_COUNTS};
use coulomb_lab::coulomb::{newton_smeared_potential, onsager_sweep};
use coulomb_lab::instability::{correlated_family, critical_charge_upper_bound, relativistic_two_body_energy, TwoBodyTrialState};
use coulomb_lab::lieb_thirring::{box_kinetic_lower_bound, dirichlet_cube_kinetic_sum, log_log_slope, stability_constant_descent, stability_constant_scan, LtParameters, StabilityObjective};
use coulomb_lab::numerics::{integrate, integrate_breakpoints, Tolerance};
use coulomb_lab::rng::{stream, DEFAULT_SEED};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {id:>2} {}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

#[test]
fn criterion_01_i0_identity() {
    let t = Instant::now();
    let v = compute_i0().unwrap();
    let elapsed = t.elapsed();
    let pass = v.rel_diff < 1e-8 && within(elapsed, 1.0);
    report(
        1,
        "I0 quadrature equals the Gamma closed form",
        pass,
        &format!(
            "quadrature {:.15}, closed form {:.15}, rel diff {:.3e}, closed/quadrature = {:.12}; the closed form is twice the integral, see README",
            v.quadrature,
            v.closed_form,
            v.rel_diff,
            v.closed_form / v.quadrature
        ),
    );
    // The two routes disagree by exactly a factor of two. Pin that, so a
    // change in either route shows up here.
    assert!((v.closed_form / v.quadrature - 2.0).abs() < 1e-8);
    assert!(within(elapsed, 1.0));
}

#[test]
fn criterion_02_semiclassical_coefficient() {
    let t = Instant::now();
    let i0 = compute_i0().unwrap().quadrature;
    let mut worst: f64 = 0.0;
    for (n, rho) in [(1.0, 0.1), (10.0, 0.1), (100.0, 0.1), (1000.0, 0.1), (3.0, 7.0)] {
        let v = semiclassical_p_integral(rho, n).unwrap();
        worst = worst.max((v / (n * rho).powf(1.25) + i0).abs() / i0);
    }
    let elapsed = t.elapsed();
    let pass = worst < 1e-5 && within(elapsed, 10.0);
    report(2, "momentum integral / (N rho)^(5/4) = -I0", pass, &format!("max rel err {worst:.3e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_03_onsager_sweep() {
    let t = Instant::now();
    let s = onsager_sweep(10_000, DEFAULT_SEED, 2, 40).unwrap();
    let elapsed = t.elapsed();
    let pass = s.violations == 0 && s.opposite_pair_failures == 0 && s.max_opposite_deviation < 1e-10 && within(elapsed, 60.0);
    report(
        3,
        "smeared-charge lower bound on 10^4 configurations",
        pass,
        &format!("violations {}, opposite-pair max dev {:.2e}, min rel gap {:.3}, {elapsed:.2?}", s.violations, s.max_opposite_deviation, s.min_relative_gap),
    );
    assert!(pass);
}

// Ball average of 1/|x - r e_z| over the ball of radius a, written as
// (3 / 2a³) ∫_0^a s² ∫_{-1}^{1} dc / √(r² + s² − 2rsc) ds with c = 1 − t².
fn ball_average_quadrature(delta: f64, r: f64) -> f64 {
    let a = 0.5 * delta;
    let inner = |s: f64| {
        if s == 0.0 {
            return 0.0;
        }
        let f = |t: f64| 2.0 * t / ((r - s).powi(2) + 2.0 * r * s * t * t).sqrt();
        s * s * integrate(f, 0.0, 2f64.sqrt(), Tolerance::new(1e-14, 1e-12)).unwrap().value
    };
    let points: Vec<f64> = if r > 0.0 && r < a { vec![0.0, r, a] } else { vec![0.0, a] };
    1.5 / a.powi(3) * integrate_breakpoints(inner, &points, Tolerance::new(1e-13, 1e-11)).unwrap().value
}

#[test]
fn criterion_04_newton_potential() {
    let mut rng = stream(DEFAULT_SEED, 4);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let delta: f64 = rng.random_range(0.1..3.0);
        let r: f64 = rng.random_range(0.0..2.0) * delta;
        let v = newton_smeared_potential(delta, r).unwrap();
        worst = worst.max((v - ball_average_quadrature(delta, r)).abs() / v);
    }
    let mut jump: f64 = 0.0;
    for delta in [0.1, 0.5, 1.0, 2.0, 7.0] {
        let edge = 0.5 * delta;
        let inside = newton_smeared_potential(delta, edge).unwrap();
        let outside = newton_smeared_potential(delta, edge.next_up()).unwrap();
        jump = jump.max((inside - outside).abs() / inside);
    }
    let pass = worst < 1e-6 && jump < 1e-12;
    report(4, "Newton potential vs ball-average quadrature", pass, &format!("max rel err {worst:.2e}, branch jump {jump:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_05_fock_oracle() {
    let t = Instant::now();
    let specs = fock_specs(DEFAULT_SEED, 20, 2, 0.5, 6.0).unwrap();
    let mut worst: f64 = 0.0;
    for s in &specs {
        assert!(s.n_modes() <= 2);
        let m = fock_oracle(s, 40).unwrap();
        worst = worst.max(m.max_error());
    }
    let elapsed = t.elapsed();
    let pass = worst < 1e-7 && within(elapsed, 60.0);
    report(5, "truncated Fock moments vs closed forms, 20 specs", pass, &format!("max err {worst:.2e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_06_dispersion_closed_form() {
    let axis: Vec<f64> = (0..50).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0)).collect();
    let mut worst: f64 = 0.0;
    for &tau in &axis {
        for &g in &axis {
            let (_, e) = bogoliubov_dispersion_min(tau, g).unwrap();
            let (_, es) = dispersion_min_scan(tau, g, 1e4).unwrap();
            worst = worst.max((e - es).abs() / e.abs().max(1.0));
        }
    }
    let pass = worst < 1e-10;
    report(6, "dispersion minimum vs golden-section scans, 50x50", pass, &format!("max err {worst:.2e}"));
    assert!(pass);
}

#[test]
fn criterion_07_dyson_solver() {
    let t = Instant::now();
    let i0 = compute_i0().unwrap().quadrature;
    let init = gaussian_initial_profile(4.0).unwrap();
    let coarse = dyson_variational_solve(DysonGrid::new(80.0, 2000).unwrap(), i0, &init, SolverOptions::default()).unwrap();
    let fine = dyson_variational_solve(DysonGrid::new(80.0, 4001).unwrap(), i0, &init, SolverOptions::default()).unwrap();
    let refinement = (coarse.energy - fine.energy).abs() / fine.energy.abs();
    let pipeline = dyson_pipeline(&coarse, &[10.0, 1e3, 1e6]).unwrap();
    let elapsed = t.elapsed();
    let pass = coarse.virial_residual < 1e-3
        && coarse.energy < 0.0
        && refinement < 1e-3
        && pipeline.max_ratio_deviation < 1e-10
        && within(elapsed, 120.0);
    report(
        7,
        "Dyson minimizer: virial, sign, refinement, N^(7/5) pipeline",
        pass,
        &format!(
            "E* {:.10}, virial {:.2e}, refinement {:.2e}, pipeline dev {:.2e}, {elapsed:.2?}",
            coarse.energy, coarse.virial_residual, refinement, pipeline.max_ratio_deviation
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_thermodynamic_limit() {
    let t = Instant::now();
    let rows = continuum_thermo_rows(&[-0.5, -1.0, -2.0], 1.0).unwrap();
    let worst = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    let shape = lattice_shape_comparison(-1.0, 4, DEFAULT_SEED).unwrap();
    let elapsed = t.elapsed();
    let pass = worst < 0.01 && shape.difference_over_sigma <= 3.0 && within(elapsed, 300.0);
    report(
        8,
        "free-fermion density extrapolation and box vs simplex",
        pass,
        &format!(
            "max density rel err {worst:.2e}, box {:.6} vs simplex {:.6} at {:.2} sigma, {elapsed:.2?}",
            shape.box_e_inf, shape.simplex_e_inf, shape.difference_over_sigma
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_graf_schenker() {
    let t = Instant::now();
    let s = graf_schenker_suite(100_000, DEFAULT_SEED, 8, 20, 3.0).unwrap();
    let elapsed = t.elapsed();
    let pass = s.passed && within(elapsed, 600.0);
    report(
        9,
        "overlap kernel, positivity and sliding statistic",
        pass,
        &format!(
            "radiality {:.2} sigma, g(0) {:.4} +- {:.4}, positivity {:?}, log trend {:.3} +- {:.3}, {elapsed:.2?}",
            s.radiality_max_sigma, s.g0, s.g0_std_error, s.positivity, s.log_trend, s.log_trend_std_error
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_lieb_thirring_chain() {
    let p = LtParameters::semiclassical(1.0, 1).unwrap();
    let mut bounds_hold = true;
    for side in [0.5, 1.0, 3.0] {
        for &n in LT_BOX_COUNTS.iter().filter(|n| **n <= 10_000) {
            let sum = dirichlet_cube_kinetic_sum(n, side, 1.0).unwrap();
            bounds_hold &= sum >= box_kinetic_lower_bound(n as u64, side.powi(3), &p).unwrap();
        }
    }
    let ns: Vec<f64> = LT_BOX_COUNTS.iter().filter(|n| **n >= 1000).map(|n| *n as f64).collect();
    let sums: Vec<f64> = ns.iter().map(|n| dirichlet_cube_kinetic_sum(*n as usize, 1.0, 1.0).unwrap()).collect();
    let (slope, _) = log_log_slope(&ns, &sums);

    let mut routes: f64 = 0.0;
    let mut finite = true;
    for spec in stability_grid() {
        let obj = StabilityObjective::new(spec, &p, &p).unwrap();
        let a = stability_constant_scan(&obj).unwrap();
        let b = stability_constant_descent(&obj).unwrap();
        finite &= a.value.is_finite() && a.value <= 0.0;
        routes = routes.max((a.value - b.value).abs() / a.value.abs().max(f64::MIN_POSITIVE));
    }
    let pass = bounds_hold && (slope - 5.0 / 3.0).abs() < 0.04 && finite && routes < 1e-8;
    report(
        10,
        "kinetic bound, 5/3 exponent, stability constant routes",
        pass,
        &format!("bounds hold {bounds_hold}, exponent {slope:.4}, finite {finite}, route diff {routes:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_11_operator_identities() {
    let lich = cli::execute(Command::Lichnerowicz, &RunConfig::default()).unwrap();
    let sob = cli::execute(Command::Sobolev, &RunConfig::default()).unwrap();
    let s = &lich.summary;
    let pass = lich.passed && sob.passed && sob.summary["holds"] == 100;
    report(
        11,
        "Lichnerowicz residual and order, diamagnetic ordering, gauge covariance",
        pass,
        &format!(
            "residual {:.2e}, min order {:.2}, gauge {:.2e}, orderings {}/{}",
            s["max_relative_residual"].as_f64().unwrap(),
            s["min_observed_order"].as_f64().unwrap(),
            s["gauge_max_rel_diff"].as_f64().unwrap(),
            sob.summary["holds"],
            sob.summary["trials"]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_12_relativistic_collapse() {
    let t = TwoBodyTrialState::correlated(0.7, 1.3).unwrap();
    let mut scaling: f64 = 0.0;
    for (q, m) in [(1.1, 1.0), (0.3, 2.5)] {
        for ell in [1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0] {
            let lhs = ell * relativistic_two_body_energy(&t, q, m, ell).unwrap().total;
            let rhs = relativistic_two_body_energy(&t, q, m * ell, 1.0).unwrap().total;
            scaling = scaling.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
    }
    let tol = 1e-6;
    let families = [
        vec![TwoBodyTrialState::separable(1.0).unwrap()],
        correlated_family(0.5, 5.0, 11).unwrap(),
        correlated_family(0.5, 50.0, 41).unwrap(),
    ];
    let bounds: Vec<_> = families.iter().map(|f| critical_charge_upper_bound(f, tol).unwrap()).collect();
    let bracketed = bounds.iter().all(|b| b.bracket.1 - b.bracket.0 <= tol && b.energy_at_lower >= 0.0 && b.energy_at_upper < 0.0);
    let monotone = bounds.windows(2).all(|w| w[1].q_upper <= w[0].q_upper + tol);
    let pass = scaling < 1e-8 && bracketed && monotone;
    report(
        12,
        "length scaling and critical-charge bracketing",
        pass,
        &format!(
            "scaling {scaling:.2e}, q_c bounds {:.6} >= {:.6} >= {:.6}",
            bounds[0].q_upper, bounds[1].q_upper, bounds[2].q_upper
        ),
    );
    assert!(pass);
}
