mod common;

use common::disk;
use interflow::assembly::{assemble_pressure_system, AssemblyOptions, Sources};
use interflow::coefficients::MediumModel;
use interflow::geometry::Point;
use interflow::solver::{solve_saddle, SaddleSolver, RESIDUAL_TOLERANCE};
use interflow::spaces::{build_spaces, lagrange_interpolate};
use interflow::verification::ExactSolution;
use interflow::Error;
use std::sync::Arc;

fn system(m: usize) -> interflow::assembly::SaddleSystem {
    let sp = build_spaces(disk(m), 1).unwrap();
    let c = lagrange_interpolate(&sp.scalar, &|_: usize, x: &Point| 0.5 + 0.1 * x.x);
    let sources = Sources::Manufactured(Arc::new(ExactSolution::default()));
    assemble_pressure_system(&sp, &MediumModel::two_phase_inclusion(), &c, &sources, 0.3, &AssemblyOptions::default())
        .unwrap()
}

fn relative_residual(sys: &interflow::assembly::SaddleSystem, x: &[f64]) -> f64 {
    let k = sys.global_matrix();
    let b = sys.global_rhs();
    let r: f64 = k.mul_vec(x).iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn pressure_solve_meets_residual_tolerance() {
    for m in [8, 32] {
        let sys = system(m);
        let (x, report) = solve_saddle(&sys).unwrap();
        assert!(report.residual < RESIDUAL_TOLERANCE, "M={m}: {}", report.residual);
        assert!(relative_residual(&sys, &x) < RESIDUAL_TOLERANCE);
    }
}

#[test]
fn pinned_solve_matches_bordered_direct_solve() {
    let sys = system(16);
    let solver = SaddleSolver::new();
    let (pinned, _) = solver.solve(&sys).unwrap();
    let (direct, _) = solver.solve_matrix(&sys.global_matrix(), &sys.global_rhs()).unwrap();
    let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in pinned.iter().zip(&direct) {
        assert!((a - b).abs() <= 1e-10 * scale);
    }
}

#[test]
fn missing_mean_row_is_reported_singular() {
    let sys = system(8).without_mean_constraint();
    let err = solve_saddle(&sys).unwrap_err();
    assert!(matches!(err, Error::Solver(_)), "{err}");
    assert!(err.is_numerical());
}

#[test]
fn repeated_solves_reuse_structure() {
    let solver = SaddleSolver::new();
    let a = system(16);
    let (x1, _) = solver.solve(&a).unwrap();
    let mut b = a.clone();
    b.rhs_scalar.iter_mut().for_each(|v| *v *= 2.0);
    let (x2, _) = solver.solve(&b).unwrap();
    for (u, v) in x1.iter().zip(&x2) {
        assert!((2.0 * u - v).abs() <= 1e-9 * (1.0 + v.abs()));
    }
}
