mod common;

use common::{adaptive_simpson, max_diff, noise};
use fracmorrey_core::data::{realize, DataKind, DataRecipe};
use fracmorrey_core::grid::forward_transform;
use fracmorrey_core::semigroup::heat;
use fracmorrey_core::solver::{
    bootstrap_schedule, check_ladder_row, duhamel_integral, linf_monitor, picard_solve,
    threshold_scan, EquationKind, PicardSolver, ProblemSpec, SolverControls, Status, TimeMesh,
};
use fracmorrey_core::{Error, Field, GridSpec, MorreyGridPolicy, SpaceParams, SumKind};

fn space(s: f64, p: f64, q: f64) -> SpaceParams {
    SpaceParams::new(s, p, q, SumKind::Infinity).unwrap()
}

fn power(theta: f64, gamma: f64, horizon: f64, sp: SpaceParams) -> ProblemSpec {
    ProblemSpec { theta, gamma, kind: EquationKind::Power, horizon, space: sp }
}

fn hj(theta: f64, gamma: f64, horizon: f64, sp: SpaceParams) -> ProblemSpec {
    ProblemSpec { theta, gamma, kind: EquationKind::HamiltonJacobi, horizon, space: sp }
}

fn controls(grid: &GridSpec, max_iters: usize, tol: f64) -> SolverControls {
    SolverControls::new(max_iters, tol, MorreyGridPolicy::dyadic(grid, 4).unwrap())
}

fn dirac(grid: &GridSpec, amplitude: f64) -> Field {
    realize(&DataRecipe::new(DataKind::Dirac { smoothing: None }, amplitude), grid).unwrap()
}

fn subcritical() -> ProblemSpec {
    power(2.0, 1.5, 0.5, space(-1.0 / 3.0, 1.5, 1.5))
}

#[test]
fn zero_data_converge_in_one_sweep() {
    let grid = GridSpec::new(1, 8.0, 128).unwrap();
    let zero = Field::constant(grid, 0.0);
    for spec in [subcritical(), hj(2.0, 1.3, 0.5, space(-1.0 + 1.0 / 1.3, 1.3, 1.3))] {
        let trace = picard_solve(spec, &zero, TimeMesh::graded(0.5, 16, 2.0).unwrap(), controls(&grid, 10, 1e-12)).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.sweeps(), 1);
        assert!(trace.solution.iter().all(|u| u.max_abs() == 0.0));
        let monitor = linf_monitor(&trace, 0.0).unwrap();
        assert!(monitor.iter().all(|&(_, m, g)| m == 0.0 && g.unwrap_or(0.0) == 0.0));
    }
}

#[test]
fn constant_data_follow_the_scalar_ode() {
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let (c, gamma) = (0.1, 2.0);
    let spec = power(2.0, gamma, 1.0, space(-0.5, 2.0, 2.0));
    let trace = picard_solve(spec, &Field::constant(grid, c), TimeMesh::graded(1.0, 256, 2.0).unwrap(), controls(&grid, 100, 1e-12)).unwrap();
    assert_eq!(trace.status, Status::Converged);
    let last = trace.solution.last().unwrap();
    assert!((last.values()[0].re - 1.0 / 9.0).abs() < 1e-4);
    for (t, max_abs, grad) in linf_monitor(&trace, 0.0).unwrap() {
        let exact = (c.powf(1.0 - gamma) - (gamma - 1.0) * t).powf(-1.0 / (gamma - 1.0));
        assert!((max_abs - exact).abs() <= 1e-4 * exact, "t = {t}");
        assert!(grad.is_none());
    }
    // spatially constant at every node
    for u in &trace.solution {
        let v = u.values()[0].re;
        assert!(u.values().iter().all(|w| (w.re - v).abs() < 1e-14));
    }
}

#[test]
fn constant_data_are_stationary_for_hamilton_jacobi() {
    let grid = GridSpec::new(2, 8.0, 16).unwrap();
    let spec = hj(2.0, 1.3, 0.5, space(-2.0 + 2.0 / 1.3, 1.3, 1.3));
    let trace = picard_solve(spec, &Field::constant(grid, 0.7), TimeMesh::graded(0.5, 16, 2.0).unwrap(), controls(&grid, 10, 1e-12)).unwrap();
    assert_eq!(trace.status, Status::Converged);
    for u in &trace.solution {
        assert!(max_diff(u, &Field::constant(grid, 0.7)) < 1e-14);
    }
    for (_, m, g) in linf_monitor(&trace, 0.1).unwrap() {
        assert!((m - 0.7).abs() < 1e-14 && g.unwrap() < 1e-14);
    }
}

#[test]
fn sweep_matches_direct_duhamel_summation() {
    let grid = GridSpec::new(1, 8.0, 128).unwrap();
    let mesh = TimeMesh::graded(0.5, 24, 2.0).unwrap();
    for spec in [subcritical(), hj(2.0, 1.3, 0.5, space(-1.0 + 1.0 / 1.3, 1.3, 1.3))] {
        let data = heat(&noise(grid, 3), 2.0, 0.01).unwrap().scale(0.1);
        let solver = PicardSolver::new(spec, &data, mesh.clone(), controls(&grid, 5, 1e-12)).unwrap();
        let u0 = solver.initial_iterate().unwrap();
        let next = solver.sweep(&u0).unwrap();
        let history: Vec<Field> = u0.iter().map(|u| solver.nonlinearity(u).unwrap()).collect();
        for node in [0, 7, 23] {
            let d = duhamel_integral(&history, &mesh, spec.theta, node).unwrap();
            let expected = u0[node].add(&d).unwrap();
            assert!(max_diff(&next[node], &expected) <= 1e-12 * expected.max_abs().max(1e-300));
        }
    }
}

#[test]
fn duhamel_of_zero_and_constant_sources() {
    let grid = GridSpec::new(2, 8.0, 16).unwrap();
    let mesh = TimeMesh::graded(0.5, 32, 2.0).unwrap();
    let zero = vec![Field::constant(grid, 0.0); mesh.len()];
    assert_eq!(duhamel_integral(&zero, &mesh, 1.5, 31).unwrap().max_abs(), 0.0);
    let c = vec![Field::constant(grid, 0.3); mesh.len()];
    for theta in [0.5, 2.0] {
        for node in [0, 10, 31] {
            let d = duhamel_integral(&c, &mesh, theta, node).unwrap();
            let t = mesh.nodes()[node];
            assert!(max_diff(&d, &Field::constant(grid, 0.3 * t)) < 1e-14);
        }
    }
    assert!(duhamel_integral(&c[..5], &mesh, 2.0, 10).is_err());
}

/// Largest relative deviation of the mesh Duhamel integral of
/// `g(tau) cos(xi x)` from `cos(xi x) int_0^t e^{-(t - tau)|xi|^theta} g(tau) dtau`
/// evaluated by adaptive quadrature, over a few nodes.
fn duhamel_mode_error(g: &dyn Fn(f64) -> f64, theta: f64, xi: f64, horizon: f64, count: usize) -> f64 {
    let grid = GridSpec::new(1, 2.0 * std::f64::consts::PI, 64).unwrap();
    let mesh = TimeMesh::graded(horizon, count, 2.0).unwrap();
    let wave = Field::from_fn(grid, |x| (xi * x[0]).cos());
    let history: Vec<Field> = mesh.nodes().iter().map(|&t| wave.scale(g(t))).collect();
    let lambda = xi.powf(theta);
    [count / 4, count / 2, count - 1]
        .iter()
        .map(|&node| {
            let t = mesh.nodes()[node];
            let exact = adaptive_simpson(&|tau| (-(t - tau) * lambda).exp() * g(tau), 0.0, t, 1e-14);
            let d = duhamel_integral(&history, &mesh, theta, node).unwrap();
            max_diff(&d, &wave.scale(exact)) / exact.abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn duhamel_matches_adaptive_quadrature_per_mode() {
    // The frozen-average error is about |xi|^theta g' dt^2 / 12 relative to g.
    let gentle = |tau: f64| 1.0 + 0.5 * tau;
    for (theta, xi) in [(2.0, 3.0), (1.5, 4.0), (0.5, 1.0)] {
        let err = duhamel_mode_error(&gentle, theta, xi, 0.1, 128);
        assert!(err <= 1e-6, "theta {theta}: {err:.3e}");
    }
}

#[test]
fn duhamel_quadrature_is_second_order() {
    let wavy = |tau: f64| (3.0 * tau).cos() + tau;
    for (theta, xi) in [(2.0, 3.0), (1.5, 7.0)] {
        let coarse = duhamel_mode_error(&wavy, theta, xi, 0.5, 64);
        let fine = duhamel_mode_error(&wavy, theta, xi, 0.5, 128);
        let order = (coarse / fine).log2();
        assert!((order - 2.0).abs() < 0.3, "theta {theta}: {coarse:.3e} -> {fine:.3e}");
    }
}

#[test]
fn growth_bound_holds_with_sweep_one_constant() {
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let mesh = TimeMesh::graded(0.5, 64, 2.0).unwrap();
    let gamma_hj = 1.3;
    let cases = [
        (subcritical(), dirac(&grid, 0.5)),
        (
            hj(2.0, gamma_hj, 0.5, space(-1.0 + 1.0 / gamma_hj, gamma_hj, gamma_hj)),
            realize(&DataRecipe::new(DataKind::Dirac { smoothing: Some((2.0, 1e-3)) }, 0.3), &grid).unwrap(),
        ),
    ];
    for (spec, data) in cases {
        let mut ctl = controls(&grid, 12, 1e-10);
        ctl.keep_iterates = true;
        let solver = PicardSolver::new(spec, &data, mesh.clone(), ctl).unwrap();
        let trace = solver.run().unwrap();
        let x = &trace.x_norms;
        let gamma = spec.gamma;
        let c_hat = solver.difference_norm(&trace.iterates[1], &trace.iterates[0]).unwrap() / x[0].powf(gamma);
        assert!(c_hat > 0.0);
        for n in 1..trace.iterates.len() - 1 {
            let bound = x[0] + 1.1 * c_hat * x[n].powf(gamma);
            assert!(x[n + 1] <= bound, "{:?} sweep {n}: {} > {bound}", spec.kind, x[n + 1]);
        }
    }
}

#[test]
fn small_dirac_run_contracts_and_is_unique_in_its_basin() {
    let grid = GridSpec::new(1, 8.0, 256).unwrap();
    let mesh = TimeMesh::graded(0.5, 64, 2.0).unwrap();
    let tol = 1e-9;
    let solver = PicardSolver::new(subcritical(), &dirac(&grid, 0.05), mesh, controls(&grid, 60, tol)).unwrap();
    let trace = solver.run().unwrap();
    assert_eq!(trace.status, Status::Converged);
    assert_eq!(trace.contraction_ratios.len(), trace.diff_norms.len() - 1);
    assert!(trace.contraction_ratios.iter().all(|&r| r <= 0.5), "{:?}", trace.contraction_ratios);
    assert!(solver.fixed_point_residual(&trace.solution).unwrap() <= 10.0 * tol);

    let bump = Field::from_fn(grid, |x| 0.01 * (-x[0] * x[0]).exp());
    let perturbed: Vec<Field> = trace.initial.iter().map(|u| u.add(&bump).unwrap()).collect();
    let other = solver.run_from(Some(perturbed)).unwrap();
    assert_eq!(other.status, Status::Converged);
    assert!(solver.difference_norm(&other.solution, &trace.solution).unwrap() <= 10.0 * tol);

    let monitor = linf_monitor(&trace, 1e-2).unwrap();
    assert!(monitor.iter().all(|m| m.1.is_finite()));
    let late: Vec<f64> = monitor.iter().filter(|m| m.0 >= 0.1).map(|m| m.1).collect();
    assert!(late.windows(2).all(|w| w[1] < w[0]));
}

fn is_even(u: &Field) -> f64 {
    let grid = u.grid();
    (0..grid.len())
        .map(|i| (u.values()[i].re - u.values()[grid.mirror_index(i)].re).abs())
        .fold(0.0, f64::max)
}

#[test]
fn even_data_give_even_iterates() {
    let grid = GridSpec::new(2, 8.0, 32).unwrap();
    let mesh = TimeMesh::graded(0.5, 16, 2.0).unwrap();
    let data = Field::from_fn(grid, |x| 0.2 * (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp() + 0.05 * x[0].cos());
    let g = 1.3;
    for spec in [power(2.0, 1.5, 0.5, space(-2.0 + 2.0 / 1.5, 1.5, 1.5)), hj(2.0, g, 0.5, space(-2.0 + 2.0 / g, g, g))] {
        let mut ctl = controls(&grid, 4, 1e-14);
        ctl.keep_iterates = true;
        let trace = picard_solve(spec, &data, mesh.clone(), ctl).unwrap();
        for iterate in &trace.iterates {
            for u in iterate {
                assert!(is_even(u) <= 1e-10 * u.max_abs());
            }
        }
    }
}

#[test]
fn large_data_diverge() {
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let spec = power(2.0, 2.0, 1.0, space(-0.5, 2.0, 2.0));
    let trace = picard_solve(spec, &Field::constant(grid, 10.0), TimeMesh::graded(1.0, 64, 2.0).unwrap(), controls(&grid, 200, 1e-10)).unwrap();
    assert_eq!(trace.status, Status::Diverged);
    assert!(trace.diagnostic.is_some());
}

#[test]
fn inadmissible_problems_are_rejected() {
    let grid = GridSpec::new(1, 8.0, 64).unwrap();
    let mesh = TimeMesh::graded(0.5, 8, 2.0).unwrap();
    let data = Field::constant(grid, 0.1);
    let bad = [
        power(2.0, 1.5, 0.5, space(0.2, 1.5, 1.5)),
        power(2.0, 1.5, 0.5, space(-1.4, 1.5, 1.5)),
        power(2.0, 2.0, 0.5, space(-0.5, 1.5, 1.5)),
        power(2.0, 1.5, 2.0, space(-1.0 / 3.0, 1.5, 1.5)),
        hj(1.0, 1.3, 0.5, space(-0.2, 1.3, 1.3)),
        hj(2.0, 2.5, 0.5, space(-0.2, 3.0, 3.0)),
    ];
    for spec in bad {
        assert!(matches!(
            PicardSolver::new(spec, &data, mesh.clone(), controls(&grid, 5, 1e-8)),
            Err(Error::Parameter(_))
        ));
    }
    let complex = data.map(|v| v * fracmorrey_core::Complex64::new(1.0, 1.0));
    assert!(PicardSolver::new(subcritical(), &complex, mesh.clone(), controls(&grid, 5, 1e-8)).is_err());
    assert!(PicardSolver::new(subcritical(), &forward_transform(&data).unwrap(), mesh, controls(&grid, 5, 1e-8)).is_err());
}

#[test]
fn tiny_amplitudes_all_converge() {
    let grid = GridSpec::new(1, 8.0, 128).unwrap();
    let mesh = TimeMesh::graded(0.5, 32, 2.0).unwrap();
    let amps = [1e-8, 1e-7, 1e-6];
    let scan = threshold_scan(subcritical(), &dirac(&grid, 1.0), &amps, &mesh, &controls(&grid, 30, 1e-12)).unwrap();
    assert!(scan.rows.iter().all(|r| r.status == Status::Converged));
    assert_eq!(scan.largest_converged, Some(1e-6));
    assert_eq!(scan.smallest_failed, None);
    assert!(scan.monotone);
    let shape = dirac(&grid, 1.0);
    let ctl = controls(&grid, 30, 1e-12);
    assert!(threshold_scan(subcritical(), &shape, &[], &mesh, &ctl).is_err());
    assert!(threshold_scan(subcritical(), &shape, &[0.2, 0.1], &mesh, &ctl).is_err());
    assert!(threshold_scan(subcritical(), &shape, &[-0.1, 0.1], &mesh, &ctl).is_err());
}

#[test]
fn supercritical_power_law_has_a_finite_bracket() {
    let (theta, gamma, p) = (2.0, 4.0, 5.0);
    let grid = GridSpec::new(1, 8.0, 128).unwrap();
    let spec = power(theta, gamma, 0.1, space(1.0 / p - theta / (gamma - 1.0), p, gamma));
    let shape = realize(&DataRecipe::new(DataKind::PowerLaw { beta: theta / (gamma - 1.0) }, 1.0), &grid).unwrap();
    let amps: Vec<f64> = (0..12).map(|i| 0.2 * 1.15f64.powi(i)).collect();
    let scan = threshold_scan(spec, &shape, &amps, &TimeMesh::graded(0.1, 32, 2.0).unwrap(), &controls(&grid, 200, 1e-8)).unwrap();
    let (ok, bad) = (scan.largest_converged.unwrap(), scan.smallest_failed.unwrap());
    assert!(ok < bad && scan.monotone, "{:?}", scan.rows);
}

#[test]
fn single_rung_ladder() {
    let rows = bootstrap_schedule(1, 2.0, 1.5, 1.5, 1.5, -1.0 / 3.0, EquationKind::Power).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].p, rows[0].q, rows[0].s), (1.5, 1.5, -1.0 / 3.0));
    assert!(1.0 / rows[0].p < 2.0 / 1.5);
}

#[test]
fn two_rung_ladder_in_two_dimensions() {
    let (n, theta, gamma) = (2usize, 2.0, 2.0);
    let rows = bootstrap_schedule(n, theta, gamma, 2.0, 2.0, -0.5, EquationKind::Power).unwrap();
    assert_eq!(rows.len(), 2);
    let nf = n as f64;
    let b = theta / gamma;
    assert!(nf / rows[1].p < b);
    assert!(nf / rows[1].p > nf / rows[0].p - b);
    assert!((rows[1].q - rows[1].p * rows[0].q / rows[0].p).abs() < 1e-14);
    assert!((rows[1].s - (nf / rows[1].p - nf / rows[0].p)).abs() < 1e-14);
    assert!(check_ladder_row(EquationKind::Power, n, theta, gamma, &rows[1]).is_ok());
}

#[test]
fn every_emitted_rung_passes_the_row_checker() {
    let mut checked = 0;
    for n in 1..=3usize {
        for &theta in &[0.5, 1.0, 1.5, 2.0, 3.0] {
            for &gamma in &[1.2, 1.5, 2.0, 3.0] {
                for &p in &[1.2, 1.5, 2.0, 3.0, 5.0, 8.0] {
                    for kind in [EquationKind::Power, EquationKind::HamiltonJacobi] {
                        let q: f64 = gamma;
                        if q > p {
                            continue;
                        }
                        let nf = n as f64;
                        let floor = match kind {
                            EquationKind::Power => nf / p - theta / (gamma - 1.0),
                            EquationKind::HamiltonJacobi => nf / p + (gamma - theta) / (gamma - 1.0),
                        };
                        let spec = ProblemSpec {
                            theta,
                            gamma,
                            kind,
                            horizon: 0.5,
                            space: space(floor.max(-0.999 * match kind {
                                EquationKind::Power => theta / gamma,
                                EquationKind::HamiltonJacobi => theta / gamma - 1.0,
                            }), p, q),
                        };
                        if spec.validate(n).is_err() {
                            continue;
                        }
                        let Ok(rows) = bootstrap_schedule(n, theta, gamma, p, q, spec.space.s, kind) else {
                            continue;
                        };
                        for row in &rows[1..] {
                            assert!(check_ladder_row(kind, n, theta, gamma, row).is_ok(), "{rows:?}");
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked > 10, "only {checked} rungs exercised");
}

#[test]
fn ladder_errors_are_configuration_errors() {
    assert!(matches!(
        bootstrap_schedule(1, 1.2, 1.5, 2.0, 1.5, -0.1, EquationKind::HamiltonJacobi),
        Err(Error::Configuration(_))
    ));
}
