//! Discontinuous scalar space and Raviart–Thomas flux space.
//!
//! The scalar space holds piecewise polynomials of degree `r` with no
//! inter-element continuity. The flux space is `P_r^2 + x P_r` on each
//! triangle with normal-moment degrees of freedom on edges, so normal traces
//! are single-valued across interior and interface edges and vanish on the
//! outer boundary.

mod flux;
mod projection;
mod ritz;

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{AffineTriangle, Point};
use crate::mesh::Mesh;
use crate::quadrature::Quadrature;

pub use flux::{FluxBasis, FluxBoundary, FluxSpace};
pub use projection::{fortin_project, l2_project, lagrange_interpolate};
pub use ritz::{mixed_ritz_project, RitzProjection};

/// Scalar field evaluated per subdomain label; `f(label, x)`.
pub trait ScalarFn: Fn(usize, &Point) -> f64 + Sync {}
impl<F: Fn(usize, &Point) -> f64 + Sync> ScalarFn for F {}

/// Vector field evaluated per subdomain label; `v(label, x)`.
pub trait VectorFn: Fn(usize, &Point) -> crate::geometry::Vec2 + Sync {}
impl<F: Fn(usize, &Point) -> crate::geometry::Vec2 + Sync> VectorFn for F {}

pub(crate) fn check_degree(r: usize) -> Result<()> {
    if r > 1 {
        return Err(Error::InvalidParameter(format!("polynomial degree must be 0 or 1, got {r}")));
    }
    Ok(())
}

/// Coefficient vector of a discrete field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub values: Vec<f64>,
}

impl FieldCoefficients {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "dof_index,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{i},{v:.16e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_csv(&mut f).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect(),
        }
    }
}

/// Quadrature points of one element in physical coordinates.
pub(crate) fn element_points<'q>(
    geo: &'q AffineTriangle,
    quad: &'q Quadrature,
) -> impl Iterator<Item = (Point, f64)> + 'q {
    let jac = geo.det.abs();
    quad.points.iter().zip(&quad.weights).map(move |(p, w)| (geo.map(p), w * jac))
}

/// Piecewise polynomials of degree `r` with a nodal (Lagrange) basis on the
/// principal lattice of each triangle.
#[derive(Debug, Clone)]
pub struct ScalarSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    mean_constrained: bool,
    geometry: Arc<Vec<AffineTriangle>>,
}

impl ScalarSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let geometry = Arc::new((0..mesh.num_triangles()).map(|t| mesh.geometry(t)).collect());
        Ok(Self {
            mesh,
            degree,
            mean_constrained: false,
            geometry,
        })
    }

    /// Same space flagged for a zero-mean constraint at solve time.
    pub fn mean_constrained(&self) -> Self {
        Self {
            mean_constrained: true,
            ..self.clone()
        }
    }

    pub fn is_mean_constrained(&self) -> bool {
        self.mean_constrained
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn local_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    pub fn ndofs(&self) -> usize {
        self.local_dim() * self.mesh.num_triangles()
    }

    pub fn dof(&self, t: usize, i: usize) -> usize {
        t * self.local_dim() + i
    }

    pub fn geometry(&self, t: usize) -> &AffineTriangle {
        &self.geometry[t]
    }

    /// Lagrange nodes of element `t`: its centroid for `r = 0`, its vertices
    /// for `r = 1`.
    pub fn nodes(&self, t: usize) -> Vec<Point> {
        let geo = &self.geometry[t];
        match self.degree {
            0 => vec![geo.centroid()],
            _ => geo.vertices.to_vec(),
        }
    }

    /// Local basis values at `x`; entries beyond `local_dim()` are zero.
    pub fn basis(&self, t: usize, x: &Point) -> [f64; 3] {
        match self.degree {
            0 => [1.0, 0.0, 0.0],
            _ => self.geometry[t].barycentric(x),
        }
    }

    pub fn eval(&self, field: &FieldCoefficients, t: usize, x: &Point) -> f64 {
        let phi = self.basis(t, x);
        (0..self.local_dim()).map(|i| field.values[self.dof(t, i)] * phi[i]).sum()
    }

    /// `∫_Ω φ_i` for every basis function.
    pub fn basis_integrals(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ndofs()];
        for t in 0..self.mesh.num_triangles() {
            let area = self.geometry[t].area();
            for i in 0..self.local_dim() {
                out[self.dof(t, i)] = area / self.local_dim() as f64;
            }
        }
        out
    }

    pub fn integral(&self, field: &FieldCoefficients) -> f64 {
        self.basis_integrals().iter().zip(&field.values).map(|(m, v)| m * v).sum()
    }

    /// Discrete L² norm computed with the given quadrature.
    pub fn l2_norm(&self, field: &FieldCoefficients, quad: &Quadrature) -> f64 {
        let mut sum = 0.0;
        for t in 0..self.mesh.num_triangles() {
            for (x, w) in element_points(&self.geometry[t], quad) {
                sum += w * self.eval(field, t, &x).powi(2);
            }
        }
        sum.sqrt()
    }
}

/// Scalar and flux spaces of the same degree on one mesh.
#[derive(Debug, Clone)]
pub struct SpacePair {
    pub scalar: ScalarSpace,
    pub flux: FluxSpace,
}

impl SpacePair {
    pub fn degree(&self) -> usize {
        self.scalar.degree()
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.scalar.mesh()
    }

    /// Pressure space: the scalar space with the zero-mean constraint.
    pub fn pressure(&self) -> ScalarSpace {
        self.scalar.mean_constrained()
    }
}

/// Builds the scalar space and the zero-normal-trace flux space of degree `r`.
pub fn build_spaces(mesh: Arc<Mesh>, r: usize) -> Result<SpacePair> {
    check_degree(r)?;
    Ok(SpacePair {
        scalar: ScalarSpace::new(mesh.clone(), r)?,
        flux: FluxSpace::new(mesh, r, FluxBoundary::ZeroNormal)?,
    })
}
