use super::{fortin_project, FieldCoefficients, ScalarFn, SpacePair, VectorFn};
use crate::assembly::{
    assemble_divergence, assemble_divergence_load, assemble_flux_load, assemble_flux_mass, assemble_gradient,
    assemble_scalar_load, AssemblyOptions, MeanConstraint, SaddleSystem,
};
use crate::coefficients::SpdTensor2;
use crate::error::Result;
use crate::geometry::Point;
use crate::solver::SaddleSolver;

/// Quadrature order for the non-polynomial data in the projection.
const RITZ_QUAD_ORDER: usize = 8;

#[derive(Debug, Clone)]
pub struct RitzProjection {
    pub scalar: FieldCoefficients,
    pub flux: FieldCoefficients,
}

/// Mixed elliptic projection of a pair `(c, w)` with `w = -A grad c`:
///
/// `(A^{-1}(W - w), v) = (C - c, div v)`, `(div (W - w), chi) = 0`,
/// `∫(C - c) = 0`.
///
/// `a_inverse(label, x)` supplies `A^{-1}`. The divergence moments of `w` are
/// taken from its canonical interpolant, which preserves them exactly.
pub fn mixed_ritz_project(
    spaces: &SpacePair,
    c: &impl ScalarFn,
    w: &impl VectorFn,
    a_inverse: impl Fn(usize, &Point) -> SpdTensor2 + Sync,
) -> Result<RitzProjection> {
    let mesh = spaces.mesh();
    let opts = AssemblyOptions {
        quad_order: Some(RITZ_QUAD_ORDER),
        element_order: None,
    };
    let flux_mass = assemble_flux_mass(spaces, |t, x| a_inverse(mesh.label(t), x), &opts)?;
    let divergence = assemble_divergence(spaces, &opts)?;
    let gradient = assemble_gradient(spaces, &opts)?;

    let aw = assemble_flux_load(
        spaces,
        |t, x| {
            let label = mesh.label(t);
            a_inverse(label, x).apply(&w(label, x))
        },
        &opts,
    )?;
    let cdiv = assemble_divergence_load(spaces, |t, x| c(mesh.label(t), x), &opts)?;
    let rhs_flux = aw.iter().zip(&cdiv).map(|(a, b)| a - b).collect();
    let rhs_scalar = divergence.mul_vec(&fortin_project(&spaces.flux, w).values);
    let mean = assemble_scalar_load(spaces, |t, x| c(mesh.label(t), x), &opts)?
        .iter()
        .sum();

    let system = SaddleSystem {
        flux_mass,
        divergence,
        gradient,
        scalar_block: None,
        convection: None,
        rhs_flux,
        rhs_scalar,
        mean_constraint: Some(MeanConstraint {
            weights: spaces.scalar.basis_integrals(),
            value: mean,
        }),
    };
    let (x, _) = SaddleSolver::new().solve(&system)?;
    let (flux, scalar, _) = system.split(&x);
    Ok(RitzProjection { scalar, flux })
}
