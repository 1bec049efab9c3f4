use std::sync::Arc;

use nalgebra::SMatrix;

use super::check_degree;
use crate::error::{Error, Result};
use crate::geometry::{AffineTriangle, Point, Vec2};
use crate::mesh::{EdgeMarker, Mesh};
use crate::quadrature::gauss_legendre;

pub const MAX_LOCAL_FLUX: usize = 8;

type LocalMatrix = SMatrix<f64, MAX_LOCAL_FLUX, MAX_LOCAL_FLUX>;

/// Treatment of normal-trace degrees of freedom on boundary edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxBoundary {
    /// Boundary normal moments are fixed to zero (`v·n = 0` on ∂Ω).
    ZeroNormal,
    /// Boundary normal moments are free unknowns.
    Free,
}

/// Values and divergences of the local basis at one point.
#[derive(Debug, Clone, Copy)]
pub struct FluxBasis {
    pub len: usize,
    pub values: [Vec2; MAX_LOCAL_FLUX],
    pub divergence: [f64; MAX_LOCAL_FLUX],
}

#[derive(Debug, Clone)]
struct FluxElement {
    center: Point,
    scale: f64,
    /// Column `k` holds the expansion of local basis function `k` in the
    /// monomial spanning set.
    coefficients: LocalMatrix,
    dofs: [Option<usize>; MAX_LOCAL_FLUX],
}

/// Global edge data: endpoints in global orientation and unit normal
/// `n = (t_y, -t_x)/|t|` with `t` pointing from the lower to the higher vertex
/// index.
#[derive(Debug, Clone, Copy)]
pub struct OrientedEdge {
    pub start: Point,
    pub end: Point,
    pub normal: Vec2,
    pub length: f64,
}

impl OrientedEdge {
    pub fn point(&self, s: f64) -> Point {
        self.start + (self.end - self.start) * s
    }
}

/// Edge moment weight `L_j(s)` on [0, 1]: 1 and `2s - 1`.
pub(crate) fn edge_weight(j: usize, s: f64) -> f64 {
    match j {
        0 => 1.0,
        _ => 2.0 * s - 1.0,
    }
}

#[derive(Debug, Clone)]
pub struct FluxSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    boundary: FluxBoundary,
    elements: Vec<FluxElement>,
    edge_dof_start: Vec<Option<usize>>,
    n_edge_dofs: usize,
    ndofs: usize,
}

impl FluxSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, boundary: FluxBoundary) -> Result<Self> {
        check_degree(degree)?;
        let per_edge = degree + 1;
        let per_element = degree * (degree + 1);

        let mut edge_dof_start = Vec::with_capacity(mesh.edges().len());
        let mut next = 0;
        for e in mesh.edges() {
            if boundary == FluxBoundary::ZeroNormal && e.marker == EdgeMarker::Boundary {
                edge_dof_start.push(None);
            } else {
                edge_dof_start.push(Some(next));
                next += per_edge;
            }
        }
        let n_edge_dofs = next;
        let ndofs = n_edge_dofs + per_element * mesh.num_triangles();

        let mut space = Self {
            mesh,
            degree,
            boundary,
            elements: Vec::new(),
            edge_dof_start,
            n_edge_dofs,
            ndofs,
        };
        let elements = (0..space.mesh.num_triangles())
            .map(|t| space.build_element(t))
            .collect::<Result<Vec<_>>>()?;
        space.elements = elements;
        Ok(space)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn boundary(&self) -> FluxBoundary {
        self.boundary
    }

    /// `(r + 1)(r + 3)`.
    pub fn local_dim(&self) -> usize {
        (self.degree + 1) * (self.degree + 3)
    }

    pub fn ndofs(&self) -> usize {
        self.ndofs
    }

    pub fn num_edge_dofs(&self) -> usize {
        self.n_edge_dofs
    }

    /// Global DOF of local basis function `k` on element `t`; `None` for
    /// constrained boundary moments.
    pub fn dof(&self, t: usize, k: usize) -> Option<usize> {
        self.elements[t].dofs[k]
    }

    pub fn dofs(&self, t: usize) -> &[Option<usize>] {
        &self.elements[t].dofs[..self.local_dim()]
    }

    pub fn edge_dof(&self, edge: usize, j: usize) -> Option<usize> {
        self.edge_dof_start[edge].map(|s| s + j)
    }

    pub fn oriented_edge(&self, edge: usize) -> OrientedEdge {
        let [a, b] = self.mesh.edges()[edge].vertices;
        let (start, end) = (self.mesh.vertices()[a], self.mesh.vertices()[b]);
        let t = end - start;
        let length = t.norm();
        OrientedEdge {
            start,
            end,
            normal: Vec2::new(t.y, -t.x) / length,
            length,
        }
    }

    /// Monomial spanning set in scaled local coordinates, with divergences.
    fn spanning(&self, center: &Point, scale: f64, x: &Point) -> ([Vec2; MAX_LOCAL_FLUX], [f64; MAX_LOCAL_FLUX]) {
        let xl = (x.x - center.x) / scale;
        let yl = (x.y - center.y) / scale;
        let mut v = [Vec2::zeros(); MAX_LOCAL_FLUX];
        let mut d = [0.0; MAX_LOCAL_FLUX];
        match self.degree {
            0 => {
                v[0] = Vec2::new(1.0, 0.0);
                v[1] = Vec2::new(0.0, 1.0);
                v[2] = Vec2::new(xl, yl);
                d[2] = 2.0 / scale;
            }
            _ => {
                v[0] = Vec2::new(1.0, 0.0);
                v[1] = Vec2::new(xl, 0.0);
                v[2] = Vec2::new(yl, 0.0);
                v[3] = Vec2::new(0.0, 1.0);
                v[4] = Vec2::new(0.0, xl);
                v[5] = Vec2::new(0.0, yl);
                v[6] = Vec2::new(xl * xl, xl * yl);
                v[7] = Vec2::new(xl * yl, yl * yl);
                d[1] = 1.0 / scale;
                d[5] = 1.0 / scale;
                d[6] = 3.0 * xl / scale;
                d[7] = 3.0 * yl / scale;
            }
        }
        (v, d)
    }

    /// Applies the local degrees of freedom of element `t` to a vector field.
    /// Edge moments use the global edge orientation; for `r = 1` the last two
    /// entries are the element means of the two components.
    pub(crate) fn local_functionals(
        &self,
        t: usize,
        geo: &AffineTriangle,
        edge_points: usize,
        interior: &[(Point, f64)],
        edge_field: &mut dyn FnMut(usize, &Point) -> Vec2,
        cell_field: &mut dyn FnMut(&Point) -> Vec2,
    ) -> [f64; MAX_LOCAL_FLUX] {
        let mut out = [0.0; MAX_LOCAL_FLUX];
        let (nodes, weights) = gauss_legendre(edge_points);
        let edges = self.mesh.triangle_edges(t);
        for (e_local, &e) in edges.iter().enumerate() {
            let oe = self.oriented_edge(e);
            for j in 0..=self.degree {
                let mut s = 0.0;
                for (sq, wq) in nodes.iter().zip(&weights) {
                    s += wq * edge_field(e, &oe.point(*sq)).dot(&oe.normal) * edge_weight(j, *sq);
                }
                out[e_local * (self.degree + 1) + j] = s * oe.length;
            }
        }
        if self.degree == 1 {
            let area = geo.area();
            let mut mean = Vec2::zeros();
            for (x, w) in interior {
                mean += cell_field(x) * *w;
            }
            mean /= area;
            out[6] = mean.x;
            out[7] = mean.y;
        }
        out
    }

    fn build_element(&self, t: usize) -> Result<FluxElement> {
        let geo = self.mesh.geometry(t);
        let center = geo.centroid();
        let scale = geo.diameter();
        let n = self.local_dim();
        let quad = crate::quadrature::build_quadrature(4)?;
        let interior: Vec<(Point, f64)> = super::element_points(&geo, &quad).collect();

        let mut dof_matrix = LocalMatrix::identity();
        for j in 0..n {
            let phi_j = |x: &Point| self.spanning(&center, scale, x).0[j];
            let col = self.local_functionals(t, &geo, 3, &interior, &mut |_, x| phi_j(x), &mut |x| phi_j(x));
            for i in 0..n {
                dof_matrix[(i, j)] = col[i];
            }
        }
        let coefficients = dof_matrix
            .try_inverse()
            .ok_or_else(|| Error::Internal(format!("singular flux degree-of-freedom matrix on element {t}")))?;

        let mut dofs = [None; MAX_LOCAL_FLUX];
        for (e_local, &e) in self.mesh.triangle_edges(t).iter().enumerate() {
            for j in 0..=self.degree {
                dofs[e_local * (self.degree + 1) + j] = self.edge_dof(e, j);
            }
        }
        if self.degree == 1 {
            dofs[6] = Some(self.n_edge_dofs + 2 * t);
            dofs[7] = Some(self.n_edge_dofs + 2 * t + 1);
        }
        Ok(FluxElement {
            center,
            scale,
            coefficients,
            dofs,
        })
    }

    /// Local basis values and divergences of element `t` at `x`.
    pub fn basis(&self, t: usize, x: &Point) -> FluxBasis {
        let el = &self.elements[t];
        let n = self.local_dim();
        let (v, d) = self.spanning(&el.center, el.scale, x);
        let mut out = FluxBasis {
            len: n,
            values: [Vec2::zeros(); MAX_LOCAL_FLUX],
            divergence: [0.0; MAX_LOCAL_FLUX],
        };
        for k in 0..n {
            let mut val = Vec2::zeros();
            let mut div = 0.0;
            for j in 0..n {
                let c = el.coefficients[(j, k)];
                val += v[j] * c;
                div += d[j] * c;
            }
            out.values[k] = val;
            out.divergence[k] = div;
        }
        out
    }

    /// Field value and divergence at `x` in element `t`.
    pub fn eval(&self, field: &super::FieldCoefficients, t: usize, x: &Point) -> (Vec2, f64) {
        let b = self.basis(t, x);
        let mut v = Vec2::zeros();
        let mut d = 0.0;
        for k in 0..b.len {
            if let Some(g) = self.elements[t].dofs[k] {
                v += b.values[k] * field.values[g];
                d += b.divergence[k] * field.values[g];
            }
        }
        (v, d)
    }
}
