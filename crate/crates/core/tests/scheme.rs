mod common;

use std::sync::Arc;

use common::disk;
use interflow::assembly::{AssemblyOptions, Sources};
use interflow::coefficients::MediumModel;
use interflow::geometry::Point;
use interflow::scheme::*;
use interflow::spaces::build_spaces;
use interflow::verification::{l2_error_flux, l2_error_scalar, manufactured_problem, ExactSolution};
use interflow::Error;

fn trivial_problem(m: usize) -> Problem {
    Problem {
        spaces: build_spaces(disk(m), 1).unwrap(),
        model: MediumModel::two_phase_inclusion(),
        sources: Sources::None,
        assembly: AssemblyOptions::default(),
    }
}

fn manufactured_scheme(m: usize, tau: f64, final_time: f64) -> (Scheme, Arc<ExactSolution>) {
    let exact = Arc::new(ExactSolution::default());
    let problem = manufactured_problem(disk(m), 1, exact.clone()).unwrap();
    let grid = TimeGrid::from_step(final_time, tau).unwrap();
    (Scheme::new(problem, grid).unwrap(), exact)
}

#[test]
fn time_grid_validation() {
    assert!(matches!(TimeGrid::new(1.0, 0), Err(Error::InvalidParameter(_))));
    assert!(TimeGrid::new(-1.0, 4).is_err());
    assert!(TimeGrid::from_step(1.0, 0.3).is_err());
    let g = TimeGrid::from_step(1.0, 0.0078125).unwrap();
    assert_eq!(g.steps, 128);
    assert!((g.tau() * g.steps as f64 - 1.0).abs() <= 1e-14);
    assert_eq!(g.time(g.steps), 1.0);
}

#[test]
fn steady_state_is_a_fixed_point() {
    let scheme = Scheme::new(trivial_problem(16), TimeGrid::new(10.0, 100).unwrap()).unwrap();
    let c0 = |_: usize, _: &Point| 0.8;
    let (initial, _) = scheme.initialize(&c0).unwrap();
    assert!(initial.velocity.values.iter().all(|v| v.abs() <= 1e-14));
    assert!(initial.pressure.values.iter().all(|v| v.abs() <= 1e-14));
    let (one, _) = scheme.step(&initial).unwrap();
    for (a, b) in one.concentration.values.iter().zip(&initial.concentration.values) {
        assert!((a - b).abs() <= 1e-10);
    }
    let out = scheme.run(&c0, None, |_, _| {}).unwrap();
    assert_eq!(out.final_state.n, 100);
    assert_eq!(out.diagnostics.len(), 101);
    for (a, b) in out.final_state.concentration.values.iter().zip(&initial.concentration.values) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn single_step_run_equals_step() {
    let (scheme, exact) = manufactured_scheme(16, 0.25, 0.25);
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let (s0, _) = scheme.initialize(&c0).unwrap();
    let (s1, _) = scheme.step(&s0).unwrap();
    let out = scheme.run(&c0, Some(1), |_, _| {}).unwrap();
    assert_eq!(out.final_state, s1);
    assert_eq!(out.snapshots.len(), 2);
    assert!(matches!(scheme.step(&s1), Err(Error::InvalidInput(_))));
}

#[test]
fn concentration_uses_old_velocity_only() {
    let (scheme, exact) = manufactured_scheme(16, 0.125, 0.5);
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let (s0, _) = scheme.initialize(&c0).unwrap();
    let (s1, _) = scheme.step(&s0).unwrap();
    // Skipping the level-1 pressure solve leaves the concentration unchanged.
    let (c1, w1, _) = scheme.concentration_update(&s0).unwrap();
    assert_eq!(c1, s1.concentration);
    assert_eq!(w1, s1.flux);
    // Pressure does not enter, the old velocity does.
    let mut probe = s0.clone();
    probe.pressure.values.iter_mut().for_each(|v| *v += 1.0);
    assert_eq!(scheme.concentration_update(&probe).unwrap().0, c1);
    probe.velocity = s1.velocity.clone();
    assert_ne!(scheme.concentration_update(&probe).unwrap().0, c1);
}

#[test]
fn manufactured_initial_state() {
    let (scheme, exact) = manufactured_scheme(32, 0.125, 1.0);
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let (s0, diag) = scheme.initialize(&c0).unwrap();
    assert!(s0.concentration.values.iter().all(|&v| (v - 0.5).abs() <= 1e-15));
    assert!(s0.flux.values.iter().all(|&v| v == 0.0));
    let spaces = &scheme.problem().spaces;
    let err = l2_error_flux(&spaces.flux, &s0.velocity, &|l, x: &Point| exact.velocity(l, x, 0.0)).unwrap();
    assert!(err <= 0.1, "{err}");
    assert!(diag.divergence_residual <= 1e-9);
    assert!(diag.pressure_mean.abs() <= 1e-10 * diag.pressure_norm.max(1e-300));
}

#[test]
fn one_manufactured_step() {
    let (scheme, exact) = manufactured_scheme(32, 0.125, 1.0);
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let (s0, _) = scheme.initialize(&c0).unwrap();
    let (s1, diag) = scheme.step(&s0).unwrap();
    assert_ne!(s1.concentration, s0.concentration);
    let spaces = &scheme.problem().spaces;
    let err = l2_error_scalar(&spaces.scalar, &s1.concentration, &|l, x: &Point| exact.concentration(l, x, 0.125))
        .unwrap();
    assert!(err <= 5e-2, "{err}");
    assert!(diag.divergence_residual <= 1e-9);
    assert!(diag.concentration_solve.unwrap().residual < 1e-10);
}

#[test]
fn every_level_satisfies_divergence_and_mean() {
    let (scheme, _) = manufactured_scheme(16, 0.1, 0.5);
    let exact = ExactSolution::default();
    let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
    let mut levels = 0;
    scheme
        .run(&c0, None, |_, d| {
            levels += 1;
            assert!(d.divergence_residual <= 1e-9, "level {}: {}", d.n, d.divergence_residual);
            assert!(d.pressure_mean.abs() <= 1e-10 * d.pressure_norm, "level {}", d.n);
        })
        .unwrap();
    assert_eq!(levels, 6);
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let (scheme, exact) = manufactured_scheme(16, 0.25, 0.5);
        let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
        scheme.run(&c0, None, |_, _| {}).unwrap().final_state
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.concentration.write_csv(&mut csv_a).unwrap();
    b.concentration.write_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b);
}

#[test]
fn invalid_model_rejected_at_construction() {
    let mut problem = trivial_problem(8);
    problem.model.dispersion.alpha2 = 0.0;
    assert!(matches!(
        Scheme::new(problem, TimeGrid::new(1.0, 1).unwrap()),
        Err(Error::InvalidParameter(_))
    ));
}
