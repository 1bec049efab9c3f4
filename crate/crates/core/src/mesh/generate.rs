//! Quasi-uniform meshes of the unit disk with an embedded circular interface.
//!
//! Boundary and interface nodes are equispaced in arc length and held fixed.
//! Interior nodes are seeded with a graded density and relaxed with a
//! truss-equilibrium iteration (repulsive bar forces toward a target edge
//! length), retriangulating with a constrained Delaunay triangulation that
//! keeps the interface and boundary polygons as constraint edges.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spade::{ConstrainedDelaunayTriangulation, Point2 as SpadePoint, Triangulation};

use super::{EdgeMarker, Mesh, Triangle};
use crate::error::{Error, Result};
use crate::geometry::{orient2d, point_in_polygon, Point};

pub const DEFAULT_MESH_SEED: u64 = 0x5eed;

const MIN_ANGLE_DEG: f64 = 15.0;

/// Parameters of a disk mesh with one circular interface.
#[derive(Debug, Clone)]
pub struct DiskInterfaceMesh {
    /// Number of nodes on the outer boundary; the interface gets half as many.
    pub boundary_nodes: usize,
    pub center: Point,
    pub radius: f64,
    pub seed: u64,
    pub iterations: usize,
}

impl DiskInterfaceMesh {
    /// Interface circle of radius 0.3 centred at (0.3, 0).
    pub fn new(boundary_nodes: usize) -> Self {
        Self {
            boundary_nodes,
            center: Point::new(0.3, 0.0),
            radius: 0.3,
            seed: DEFAULT_MESH_SEED,
            iterations: 150,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_interface(mut self, center: Point, radius: f64) -> Self {
        self.center = center;
        self.radius = radius;
        self
    }

    fn validate(&self) -> Result<()> {
        let m = self.boundary_nodes;
        if m < 8 || m % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "boundary node count must be even and at least 8, got {m}"
            )));
        }
        if !(self.radius > 0.0) || self.center.coords.norm() + self.radius >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "interface circle (center ({}, {}), radius {}) must lie strictly inside the unit disk",
                self.center.x, self.center.y, self.radius
            )));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Mesh> {
        self.validate()?;
        Generator::new(self).run()
    }
}

/// Unit-disk mesh with `m` boundary nodes and `m/2` nodes on the interface
/// circle; triangles inside the interface get label 1, the rest label 0.
pub fn generate_disk_interface_mesh(m: usize, center: Point, radius: f64) -> Result<Mesh> {
    DiskInterfaceMesh::new(m).with_interface(center, radius).generate()
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Inner,
    Outer,
}

struct Generator<'a> {
    params: &'a DiskInterfaceMesh,
    n_boundary: usize,
    n_interface: usize,
    h_boundary: f64,
    h_interface: f64,
}

impl<'a> Generator<'a> {
    fn new(params: &'a DiskInterfaceMesh) -> Self {
        let n_boundary = params.boundary_nodes;
        let n_interface = n_boundary / 2;
        Self {
            params,
            n_boundary,
            n_interface,
            h_boundary: 2.0 * (PI / n_boundary as f64).sin(),
            h_interface: 2.0 * params.radius * (PI / n_interface as f64).sin(),
        }
    }

    fn interface_distance(&self, x: &Point) -> f64 {
        (x - self.params.center).norm() - self.params.radius
    }

    /// Target edge length: the interface spacing inside the inclusion, blended
    /// linearly toward the boundary spacing outside it.
    fn size(&self, x: &Point) -> f64 {
        let di = self.interface_distance(x);
        if di <= 0.0 {
            return self.h_interface;
        }
        let db = (1.0 - x.coords.norm()).max(0.0);
        let t = di / (di + db).max(1e-300);
        self.h_interface + (self.h_boundary - self.h_interface) * t
    }

    fn fixed_points(&self) -> Vec<Point> {
        let mut pts = Vec::with_capacity(self.n_boundary + self.n_interface);
        for k in 0..self.n_boundary {
            let a = 2.0 * PI * k as f64 / self.n_boundary as f64;
            pts.push(Point::new(a.cos(), a.sin()));
        }
        let (c, r) = (self.params.center, self.params.radius);
        for k in 0..self.n_interface {
            let a = 2.0 * PI * k as f64 / self.n_interface as f64;
            pts.push(Point::new(c.x + r * a.cos(), c.y + r * a.sin()));
        }
        pts
    }

    fn constraint_edges(&self) -> Vec<[usize; 2]> {
        let (nb, ni) = (self.n_boundary, self.n_interface);
        let mut edges: Vec<[usize; 2]> = (0..nb).map(|k| [k, (k + 1) % nb]).collect();
        edges.extend((0..ni).map(|k| [nb + k, nb + (k + 1) % ni]));
        edges
    }

    fn side(&self, x: &Point) -> Side {
        if self.interface_distance(x) < 0.0 {
            Side::Inner
        } else {
            Side::Outer
        }
    }

    /// Pulls a free node back so that it keeps a clearance of a fraction of
    /// the local spacing from both curves and stays on its original side.
    fn clamp(&self, x: &mut Point, side: Side) {
        let (c, r) = (self.params.center, self.params.radius);
        let clearance = 0.3;
        match side {
            Side::Inner => {
                let limit = r - clearance * self.h_interface;
                let d = *x - c;
                let n = d.norm();
                if n > limit {
                    *x = c + d * (limit / n);
                }
            }
            Side::Outer => {
                let limit_b = 1.0 - clearance * self.h_boundary;
                let n = x.coords.norm();
                if n > limit_b {
                    *x = Point::from(x.coords * (limit_b / n));
                }
                let limit_i = r + clearance * self.h_interface;
                let d = *x - c;
                let n = d.norm();
                if n < limit_i {
                    let dir = if n > 1e-14 { d / n } else { nalgebra::Vector2::new(1.0, 0.0) };
                    *x = c + dir * limit_i;
                }
            }
        }
    }

    fn seed_interior(&self, rng: &mut ChaCha8Rng) -> Vec<(Point, Side)> {
        let h0 = self.h_interface.min(self.h_boundary);
        let dy = h0 * 3f64.sqrt() / 2.0;
        let mut out = Vec::new();
        let rows = (2.0 / dy).ceil() as i64 + 1;
        let cols = (2.0 / h0).ceil() as i64 + 1;
        for j in 0..=rows {
            let y = -1.0 + j as f64 * dy;
            let shift = if j % 2 == 0 { 0.0 } else { 0.5 * h0 };
            for i in 0..=cols {
                let p = Point::new(-1.0 + shift + i as f64 * h0, y);
                if p.coords.norm() > 1.0 - 0.5 * self.h_boundary {
                    continue;
                }
                if self.interface_distance(&p).abs() < 0.5 * self.h_interface {
                    continue;
                }
                let keep = (h0 / self.size(&p)).powi(2);
                if rng.random::<f64>() < keep {
                    out.push((p, self.side(&p)));
                }
            }
        }
        out
    }

    fn triangulate(&self, points: &[Point]) -> Result<Vec<[usize; 3]>> {
        let spade_pts: Vec<SpadePoint<f64>> = points.iter().map(|p| SpadePoint::new(p.x, p.y)).collect();
        let cdt = ConstrainedDelaunayTriangulation::<SpadePoint<f64>>::bulk_load_cdt(
            spade_pts,
            self.constraint_edges(),
        )
        .map_err(|e| Error::GenerationFailure(format!("triangulation failed: {e:?}")))?;
        if cdt.num_vertices() != points.len() {
            return Err(Error::GenerationFailure(format!(
                "{} coincident nodes were merged by the triangulator",
                points.len() - cdt.num_vertices()
            )));
        }
        Ok(cdt
            .inner_faces()
            .map(|f| {
                let [a, b, c] = f.vertices();
                let mut tri = [a.fix().index(), b.fix().index(), c.fix().index()];
                if orient2d(&points[tri[0]], &points[tri[1]], &points[tri[2]]) < 0.0 {
                    tri.swap(1, 2);
                }
                tri
            })
            .collect())
    }

    fn run(&self) -> Result<Mesh> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let mut points = self.fixed_points();
        let n_fixed = points.len();
        let interior = self.seed_interior(&mut rng);
        let sides: Vec<Side> = interior.iter().map(|&(_, s)| s).collect();
        points.extend(interior.into_iter().map(|(p, _)| p));

        let dt = 0.2;
        let scale_up = 1.2;
        let tol = 1e-4 * self.h_interface;
        for _ in 0..self.params.iterations {
            let tris = self.triangulate(&points)?;
            let mut bars: Vec<(usize, usize)> = tris
                .iter()
                .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
                .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
                .collect();
            bars.sort_unstable();
            bars.dedup();

            let lengths: Vec<f64> = bars.iter().map(|&(a, b)| (points[a] - points[b]).norm()).collect();
            let targets: Vec<f64> = bars
                .iter()
                .map(|&(a, b)| self.size(&Point::from((points[a].coords + points[b].coords) * 0.5)))
                .collect();
            let sum_l2: f64 = lengths.iter().map(|l| l * l).sum();
            let sum_t2: f64 = targets.iter().map(|t| t * t).sum();
            let norm = scale_up * (sum_l2 / sum_t2).sqrt();

            let mut force = vec![nalgebra::Vector2::zeros(); points.len()];
            for (k, &(a, b)) in bars.iter().enumerate() {
                let l0 = targets[k] * norm;
                let push = (l0 - lengths[k]).max(0.0);
                if push == 0.0 {
                    continue;
                }
                let f = (points[a] - points[b]) * (push / lengths[k]);
                force[a] += f;
                force[b] -= f;
            }

            let mut max_move: f64 = 0.0;
            for i in n_fixed..points.len() {
                let old = points[i];
                let mut p = old + force[i] * dt;
                self.clamp(&mut p, sides[i - n_fixed]);
                max_move = max_move.max((p - old).norm());
                points[i] = p;
            }
            if max_move < tol {
                break;
            }
        }

        let tris = self.triangulate(&points)?;
        let interface_polygon: Vec<Point> = points[self.n_boundary..n_fixed].to_vec();
        let triangles: Vec<Triangle> = tris
            .iter()
            .map(|t| {
                let centroid =
                    Point::from((points[t[0]].coords + points[t[1]].coords + points[t[2]].coords) / 3.0);
                let label = usize::from(point_in_polygon(&centroid, &interface_polygon));
                Triangle { vertices: *t, label }
            })
            .collect();

        let mesh = Mesh::from_triangles(points, triangles)
            .map_err(|e| Error::GenerationFailure(format!("generated mesh is invalid: {e}")))?;

        let n_bnd = mesh.edges_with_marker(|m| m == EdgeMarker::Boundary).count();
        let n_ifc = mesh.edges_with_marker(|m| matches!(m, EdgeMarker::Interface(_))).count();
        if n_bnd != self.n_boundary || n_ifc != self.n_interface {
            return Err(Error::GenerationFailure(format!(
                "mesh does not conform to the curves: {n_bnd} boundary edges (expected {}), {n_ifc} interface edges (expected {})",
                self.n_boundary, self.n_interface
            )));
        }
        let min_angle = mesh.min_angle_deg();
        if min_angle < MIN_ANGLE_DEG {
            return Err(Error::GenerationFailure(format!(
                "minimum angle {min_angle:.2} deg is below {MIN_ANGLE_DEG} deg ({} triangles, {} nodes)",
                mesh.num_triangles(),
                mesh.num_vertices()
            )));
        }
        log::debug!(
            "disk mesh M={}: {} nodes, {} triangles, h={:.4}, min angle {:.1} deg",
            self.n_boundary,
            mesh.num_vertices(),
            mesh.num_triangles(),
            mesh.h(),
            min_angle
        );
        Ok(mesh)
    }
}
