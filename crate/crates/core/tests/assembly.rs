mod common;

use std::sync::Arc;

use common::{disk, points, reference_triangle};
use interflow::assembly::*;
use interflow::coefficients::{MediumModel, SpdTensor2, ViscosityLaw};
use interflow::geometry::{Point, Vec2};
use interflow::quadrature::build_quadrature;
use interflow::solver::SaddleSolver;
use interflow::spaces::*;
use interflow::sparse::CsrMatrix;
use interflow::verification::ExactSolution;
use interflow::Error;
use proptest::prelude::*;

fn spaces(m: usize) -> SpacePair {
    build_spaces(disk(m), 1).unwrap()
}

fn wavy_concentration(spaces: &SpacePair) -> FieldCoefficients {
    lagrange_interpolate(&spaces.scalar, &|_: usize, x: &Point| 0.5 + 0.3 * (2.0 * x.x).sin() * x.y)
}

fn manufactured() -> Sources {
    Sources::Manufactured(Arc::new(ExactSolution::default()))
}

fn pressure_system(sp: &SpacePair, opts: &AssemblyOptions) -> SaddleSystem {
    let model = MediumModel::two_phase_inclusion();
    assemble_pressure_system(sp, &model, &wavy_concentration(sp), &manufactured(), 0.5, opts).unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn flux_mass_is_symmetric() {
    let sp = spaces(16);
    let sys = pressure_system(&sp, &AssemblyOptions::default());
    let a = &sys.flux_mass;
    assert!(a.max_abs_diff(&a.transpose()) <= 1e-13 * a.max_abs());
}

#[test]
fn concentration_flux_mass_is_symmetric_positive() {
    let sp = spaces(16);
    let model = MediumModel::two_phase_inclusion();
    let u = fortin_project(&sp.flux, &|_: usize, x: &Point| Vec2::new(1.0 - x.coords.norm_squared(), 0.3 * x.x));
    let c = wavy_concentration(&sp);
    let sys =
        assemble_concentration_system(&sp, &model, &u, &c, 0.1, &Sources::None, 0.1, &AssemblyOptions::default())
            .unwrap();
    let a = &sys.flux_mass;
    assert!(a.max_abs_diff(&a.transpose()) <= 1e-13 * a.max_abs());
    for k in 0..100 {
        let z: Vec<f64> = (0..a.nrows).map(|i| ((i * 7 + k * 13) as f64 * 0.61).sin()).collect();
        assert!(dot(&z, &a.mul_vec(&z)) > 0.0);
    }
}

#[test]
fn gradient_block_is_divergence_transpose() {
    let sp = spaces(16);
    let sys = pressure_system(&sp, &AssemblyOptions::default());
    let bt = sys.divergence.transpose();
    assert_eq!((bt.nrows, bt.ncols), (sys.gradient.nrows, sys.gradient.ncols));
    assert!(sys.gradient.max_abs_diff(&bt) <= 1e-15 * sys.divergence.max_abs());
}

fn assert_close(a: &CsrMatrix, b: &CsrMatrix) {
    assert!(a.max_abs_diff(b) <= 1e-13 * a.max_abs().max(1.0));
}

#[test]
fn assembly_independent_of_element_order() {
    let sp = spaces(16);
    let n = sp.mesh().num_triangles();
    let natural = pressure_system(&sp, &AssemblyOptions::default());
    let mut order: Vec<usize> = (0..n).rev().collect();
    order.rotate_left(n / 3);
    let opts = AssemblyOptions {
        element_order: Some(order.clone()),
        ..Default::default()
    };
    let permuted = pressure_system(&sp, &opts);
    assert_close(&natural.flux_mass, &permuted.flux_mass);
    assert_close(&natural.divergence, &permuted.divergence);
    assert_close(&natural.gradient, &permuted.gradient);
    for (a, b) in natural.rhs_scalar.iter().zip(&permuted.rhs_scalar) {
        assert!((a - b).abs() <= 1e-13);
    }

    let model = MediumModel::two_phase_inclusion();
    let u = fortin_project(&sp.flux, &|_: usize, x: &Point| Vec2::new(x.y, -x.x));
    let c = wavy_concentration(&sp);
    let conc = |opts: &AssemblyOptions| {
        assemble_concentration_system(&sp, &model, &u, &c, 0.05, &manufactured(), 0.55, opts).unwrap()
    };
    let (a, b) = (conc(&AssemblyOptions::default()), conc(&opts));
    assert_close(&a.flux_mass, &b.flux_mass);
    assert_close(a.convection.as_ref().unwrap(), b.convection.as_ref().unwrap());
    assert_close(a.scalar_block.as_ref().unwrap(), b.scalar_block.as_ref().unwrap());
}

#[test]
fn manufactured_divergence_load_matches_high_order_oracle() {
    let sp = spaces(32);
    let exact = ExactSolution::default();
    let opts = AssemblyOptions {
        quad_order: Some(10),
        ..Default::default()
    };
    let sys = pressure_system(&sp, &opts);
    let mesh = sp.mesh();
    let quad = build_quadrature(10).unwrap();
    let mut load = vec![0.0; sp.scalar.ndofs()];
    let mut mass = vec![0.0; sp.scalar.ndofs()];
    for t in 0..mesh.num_triangles() {
        let geo = mesh.geometry(t);
        for (x, w) in points(&geo, &quad) {
            let lambda = geo.barycentric(&x);
            let g = exact.divergence_source(mesh.label(t), &x, 0.5);
            for i in 0..3 {
                load[3 * t + i] += w * g * lambda[i];
                mass[3 * t + i] += w * lambda[i];
            }
        }
    }
    let shift = load.iter().sum::<f64>() / mesh.area();
    let scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..load.len() {
        let oracle = load[i] - shift * mass[i];
        assert!((sys.rhs_scalar[i] - oracle).abs() <= 1e-10 * scale, "dof {i}");
    }
}

#[test]
fn constant_pressure_spans_null_space_without_mean_row() {
    let sp = spaces(16);
    let sys = pressure_system(&sp, &AssemblyOptions::default()).without_mean_constraint();
    let k = sys.global_matrix();
    let mut z = vec![0.0; sys.size()];
    for v in &mut z[sys.nflux()..] {
        *v = 1.0;
    }
    let r = k.mul_vec(&z);
    assert!(r.iter().all(|v| v.abs() < 1e-10));
    let err = SaddleSolver::new().solve(&sys).unwrap_err();
    assert!(matches!(err, Error::Solver(_)), "{err}");
}

#[test]
fn homogeneous_pressure_problem_is_trivial() {
    let sp = spaces(16);
    let model = MediumModel {
        viscosity: ViscosityLaw::Constant(1.0),
        mu0: 1.0,
        ..MediumModel::two_phase_inclusion()
    };
    let c = FieldCoefficients::zeros(sp.scalar.ndofs());
    let sys = assemble_pressure_system(&sp, &model, &c, &Sources::None, 0.0, &AssemblyOptions::default()).unwrap();
    let (x, _) = SaddleSolver::new().solve(&sys).unwrap();
    assert!(x.iter().all(|v| v.abs() <= 1e-14));
}

#[test]
fn steady_concentration_is_preserved() {
    let sp = spaces(16);
    let model = MediumModel::two_phase_inclusion();
    let u = FieldCoefficients::zeros(sp.flux.ndofs());
    let c = lagrange_interpolate(&sp.scalar, &|_: usize, _: &Point| 0.7);
    let sys =
        assemble_concentration_system(&sp, &model, &u, &c, 0.1, &Sources::None, 0.1, &AssemblyOptions::default())
            .unwrap();
    assert!(sys.mean_constraint.is_none());
    let (x, _) = SaddleSolver::new().solve(&sys).unwrap();
    let (w, cn, _) = sys.split(&x);
    assert!(cn.values.iter().all(|v| (v - 0.7).abs() <= 1e-12));
    assert!(w.values.iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn dispersion_block_at_rest_is_scaled_mass() {
    let sp = spaces(16);
    let mut model = MediumModel::two_phase_inclusion();
    model.porosity = vec![0.5, 0.5];
    model.dispersion.d0 = 4.0;
    let u = FieldCoefficients::zeros(sp.flux.ndofs());
    let c = FieldCoefficients::zeros(sp.scalar.ndofs());
    let opts = AssemblyOptions::default();
    let sys = assemble_concentration_system(&sp, &model, &u, &c, 0.1, &Sources::None, 0.1, &opts).unwrap();
    let mass = assemble_flux_mass(&sp, |_, _| SpdTensor2::scaled_identity(1.0), &opts).unwrap();
    let mut scaled = mass.clone();
    scaled.values.iter_mut().for_each(|v| *v /= 2.0);
    assert_close(&sys.flux_mass, &scaled);
}

#[test]
fn single_element_convection_matches_oracle() {
    let mesh = reference_triangle();
    let sp = SpacePair {
        scalar: ScalarSpace::new(mesh.clone(), 1).unwrap(),
        flux: FluxSpace::new(mesh.clone(), 1, FluxBoundary::Free).unwrap(),
    };
    let model = MediumModel::two_phase_inclusion();
    let u0 = Vec2::new(0.8, -0.3);
    let u = fortin_project(&sp.flux, &|_: usize, _: &Point| u0);
    let c = FieldCoefficients::zeros(3);
    let sys =
        assemble_concentration_system(&sp, &model, &u, &c, 0.1, &Sources::None, 0.1, &AssemblyOptions::default())
            .unwrap();
    let g = sys.convection.unwrap();
    let beta = model.dispersion_tensor_inverse(0, &u0).apply(&u0);
    let quad = build_quadrature(10).unwrap();
    let geo = mesh.geometry(0);
    for i in 0..3 {
        for j in 0..8 {
            let oracle: f64 = points(&geo, &quad)
                .into_iter()
                .map(|(x, w)| w * beta.dot(&sp.flux.basis(0, &x).values[j]) * geo.barycentric(&x)[i])
                .sum();
            let col = sp.flux.dof(0, j).unwrap();
            assert!((g.get(i, col) - oracle).abs() <= 1e-12, "({i}, {j}): {} vs {oracle}", g.get(i, col));
        }
    }
}

#[test]
fn nonpositive_time_step_rejected() {
    let sp = spaces(8);
    let model = MediumModel::two_phase_inclusion();
    let u = FieldCoefficients::zeros(sp.flux.ndofs());
    let c = FieldCoefficients::zeros(sp.scalar.ndofs());
    for tau in [0.0, -0.1, f64::NAN] {
        let err = assemble_concentration_system(&sp, &model, &u, &c, tau, &Sources::None, 0.0, &Default::default())
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}

fn wells() -> SmoothWells {
    let inj = Well {
        center: Point::new(-0.5, 0.0),
        rate: 1.0,
        radius: 0.2,
    };
    let prod = Well {
        center: Point::new(0.5, 0.2),
        rate: 0.5,
        radius: 0.2,
    };
    SmoothWells::new(vec![inj], vec![prod], 1.0).unwrap()
}

#[test]
fn unbalanced_wells_violate_compatibility() {
    let sp = spaces(16);
    let model = MediumModel::two_phase_inclusion();
    let c = FieldCoefficients::zeros(sp.scalar.ndofs());
    let opts = AssemblyOptions::default();
    let err = assemble_pressure_system(&sp, &model, &c, &Sources::Wells(Arc::new(wells())), 0.0, &opts).unwrap_err();
    assert!(matches!(err, Error::Compatibility { .. }));
    assert!(err.is_numerical());

    let balanced = Sources::Wells(Arc::new(wells().balanced(&sp, &opts).unwrap()));
    let sys = assemble_pressure_system(&sp, &model, &c, &balanced, 0.0, &opts).unwrap();
    let (x, report) = SaddleSolver::new().solve(&sys).unwrap();
    assert!(report.residual < 1e-10);
    let (_, p, _) = sys.split(&x);
    assert!(sp.scalar.integral(&p).abs() < 1e-10);
}

#[test]
fn well_density_integrates_to_rate() {
    let w = Well {
        center: Point::new(0.1, 0.0),
        rate: 2.5,
        radius: 0.3,
    };
    let sp = spaces(64);
    let load = assemble_scalar_load(&sp, |_, x| w.density(x), &AssemblyOptions::default()).unwrap();
    let total: f64 = load.iter().sum();
    assert!((total - 2.5).abs() < 2e-2, "{total}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn resistance_mass_is_positive(seed in any::<u64>()) {
        let sp = spaces(8);
        let sys = pressure_system(&sp, &AssemblyOptions::default());
        let mut s = seed;
        let z: Vec<f64> = (0..sys.nflux())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        prop_assume!(z.iter().any(|v| v.abs() > 1e-3));
        prop_assert!(dot(&z, &sys.flux_mass.mul_vec(&z)) > 0.0);
    }
}
