use nalgebra::{DMatrix, DVector};

use super::{element_points, FieldCoefficients, FluxSpace, ScalarFn, ScalarSpace, VectorFn};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::{build_quadrature, Quadrature};

/// Nodal interpolation on the principal lattice of each element.
pub fn lagrange_interpolate(space: &ScalarSpace, f: &impl ScalarFn) -> FieldCoefficients {
    let mesh = space.mesh();
    let mut out = FieldCoefficients::zeros(space.ndofs());
    for t in 0..mesh.num_triangles() {
        let label = mesh.label(t);
        for (i, node) in space.nodes(t).iter().enumerate() {
            out.values[space.dof(t, i)] = f(label, node);
        }
    }
    out
}

/// L² projection onto the scalar space, element by element.
pub fn l2_project(space: &ScalarSpace, f: &impl ScalarFn, quad: &Quadrature) -> Result<FieldCoefficients> {
    let mesh = space.mesh();
    let n = space.local_dim();
    let mut out = FieldCoefficients::zeros(space.ndofs());
    for t in 0..mesh.num_triangles() {
        let label = mesh.label(t);
        let mut mass = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (x, w) in element_points(space.geometry(t), quad) {
            let phi = space.basis(t, &x);
            let fx = f(label, &x);
            for i in 0..n {
                rhs[i] += w * fx * phi[i];
                for j in 0..n {
                    mass[(i, j)] += w * phi[i] * phi[j];
                }
            }
        }
        let chol = mass
            .cholesky()
            .ok_or_else(|| Error::Internal(format!("singular local mass matrix on element {t}")))?;
        let coeffs = chol.solve(&rhs);
        for i in 0..n {
            out.values[space.dof(t, i)] = coeffs[i];
        }
    }
    Ok(out)
}

/// Canonical interpolant onto the flux space: matches the edge normal
/// moments against `P_r` and, for `r = 1`, the element means of `v`. On an
/// edge between two subdomains the field is averaged over both labels.
pub fn fortin_project(space: &FluxSpace, v: &impl VectorFn) -> FieldCoefficients {
    let mesh = space.mesh();
    let quad = build_quadrature(8).expect("order 8 is supported");
    let mut out = FieldCoefficients::zeros(space.ndofs());
    for t in 0..mesh.num_triangles() {
        let label = mesh.label(t);
        let geo = mesh.geometry(t);
        let interior: Vec<(Point, f64)> = element_points(&geo, &quad).collect();
        let mut edge_field = |e: usize, x: &Point| {
            let [a, b] = mesh.edges()[e].triangles;
            match (a, b) {
                (Some(a), Some(b)) if mesh.label(a) != mesh.label(b) => {
                    (v(mesh.label(a), x) + v(mesh.label(b), x)) * 0.5
                }
                _ => v(label, x),
            }
        };
        let mut cell_field = |x: &Point| v(label, x);
        let local = space.local_functionals(t, &geo, 6, &interior, &mut edge_field, &mut cell_field);
        for (k, dof) in space.dofs(t).iter().enumerate() {
            if let Some(g) = dof {
                out.values[*g] = local[k];
            }
        }
    }
    out
}
