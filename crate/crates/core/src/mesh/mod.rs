//! Conforming triangulations with subdomain labels and marked edges.

mod generate;
mod io;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{orient2d, AffineTriangle, Point};

pub use generate::{generate_disk_interface_mesh, DiskInterfaceMesh, DEFAULT_MESH_SEED};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeMarker {
    Interior,
    Boundary,
    /// Edge on the interface enclosing subdomain `m`.
    Interface(usize),
}

impl fmt::Display for EdgeMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeMarker::Interior => write!(f, "int"),
            EdgeMarker::Boundary => write!(f, "bnd"),
            EdgeMarker::Interface(m) => write!(f, "ifc:{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    /// Counter-clockwise vertex indices.
    pub vertices: [usize; 3],
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Vertex indices with `vertices[0] < vertices[1]`; this fixes the global
    /// edge orientation used for normal-trace degrees of freedom.
    pub vertices: [usize; 2],
    pub marker: EdgeMarker,
    /// Incident triangles; the second is `None` on boundary edges.
    pub triangles: [Option<usize>; 2],
}

/// Validated, immutable triangulation.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<Triangle>,
    edges: Vec<Edge>,
    /// `triangle_edges[t][i]` is the edge opposite local vertex `i`.
    triangle_edges: Vec<[usize; 3]>,
    h: f64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds a mesh from vertices and labelled triangles, inferring edge
    /// markers from the topology.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<Triangle>) -> Result<Self> {
        Self::build(vertices, triangles, None)
    }

    /// Builds a mesh and checks an explicit edge list against the topology.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        edges: Vec<([usize; 2], EdgeMarker)>,
    ) -> Result<Self> {
        Self::build(vertices, triangles, Some(edges))
    }

    fn build(
        vertices: Vec<Point>,
        triangles: Vec<Triangle>,
        listed: Option<Vec<([usize; 2], EdgeMarker)>>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::Validation("mesh has no triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in &tri.vertices {
                if v >= vertices.len() {
                    return Err(Error::Validation(format!(
                        "triangle {t} references vertex {v} but only {} vertices exist",
                        vertices.len()
                    )));
                }
            }
            let [a, b, c] = tri.vertices;
            if orient2d(&vertices[a], &vertices[b], &vertices[c]) <= 0.0 {
                return Err(Error::Validation(format!(
                    "triangle {t} ({a} {b} {c}) has non-positive signed area"
                )));
            }
        }

        let mut incidence: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let key = edge_key(tri.vertices[(i + 1) % 3], tri.vertices[(i + 2) % 3]);
                incidence.entry(key).or_default().push((t, i));
            }
        }
        let mut keys: Vec<_> = incidence.keys().copied().collect();
        keys.sort_unstable();

        for key in &keys {
            let inc = &incidence[key];
            if inc.len() > 2 {
                return Err(Error::Validation(format!(
                    "edge {}-{} is shared by {} triangles",
                    key.0,
                    key.1,
                    inc.len()
                )));
            }
        }

        // Hanging nodes: a vertex in the relative interior of an edge that has
        // only one incident triangle.
        for key in &keys {
            if incidence[key].len() != 1 {
                continue;
            }
            let (a, b) = (vertices[key.0], vertices[key.1]);
            let len2 = (b - a).norm_squared();
            for (v, p) in vertices.iter().enumerate() {
                if v == key.0 || v == key.1 {
                    continue;
                }
                let s = (p - a).dot(&(b - a)) / len2;
                if s <= 1e-12 || s >= 1.0 - 1e-12 {
                    continue;
                }
                let dist = orient2d(&a, &b, p).abs() / len2.sqrt();
                if dist <= 1e-12 * len2.sqrt().max(1.0) {
                    return Err(Error::Validation(format!(
                        "hanging node {v} lies on edge {}-{}",
                        key.0, key.1
                    )));
                }
            }
        }

        let topological_marker = |key: &(usize, usize)| -> EdgeMarker {
            let inc = &incidence[key];
            if inc.len() == 1 {
                EdgeMarker::Boundary
            } else {
                let (la, lb) = (triangles[inc[0].0].label, triangles[inc[1].0].label);
                if la == lb {
                    EdgeMarker::Interior
                } else {
                    EdgeMarker::Interface(la.max(lb))
                }
            }
        };

        let markers: HashMap<(usize, usize), EdgeMarker> = match listed {
            None => keys.iter().map(|k| (*k, topological_marker(k))).collect(),
            Some(list) => {
                let mut seen: HashMap<(usize, usize), EdgeMarker> = HashMap::new();
                for ([a, b], marker) in list {
                    let key = edge_key(a, b);
                    let Some(inc) = incidence.get(&key) else {
                        return Err(Error::Validation(format!(
                            "edge {a}-{b} does not belong to any triangle"
                        )));
                    };
                    if seen.insert(key, marker).is_some() {
                        return Err(Error::Validation(format!("edge {a}-{b} is listed twice")));
                    }
                    let labels: Vec<usize> = inc.iter().map(|&(t, _)| triangles[t].label).collect();
                    let ok = match marker {
                        EdgeMarker::Boundary => inc.len() == 1,
                        EdgeMarker::Interior => inc.len() == 2 && labels[0] == labels[1],
                        EdgeMarker::Interface(m) => {
                            inc.len() == 2 && labels[0] != labels[1] && labels.contains(&m)
                        }
                    };
                    if !ok {
                        return Err(Error::Validation(format!(
                            "edge {a}-{b} is marked {marker} but has {} incident triangle(s) with labels {labels:?}",
                            inc.len()
                        )));
                    }
                }
                if let Some(missing) = keys.iter().find(|k| !seen.contains_key(k)) {
                    return Err(Error::Validation(format!(
                        "edge {}-{} is missing from the edge list",
                        missing.0, missing.1
                    )));
                }
                seen
            }
        };

        let mut index_of: HashMap<(usize, usize), usize> = HashMap::with_capacity(keys.len());
        let mut edges = Vec::with_capacity(keys.len());
        for key in &keys {
            let inc = &incidence[key];
            index_of.insert(*key, edges.len());
            edges.push(Edge {
                vertices: [key.0, key.1],
                marker: markers[key],
                triangles: [Some(inc[0].0), inc.get(1).map(|&(t, _)| t)],
            });
        }
        let triangle_edges = triangles
            .iter()
            .map(|tri| {
                let mut te = [0; 3];
                for (i, e) in te.iter_mut().enumerate() {
                    *e = index_of[&edge_key(tri.vertices[(i + 1) % 3], tri.vertices[(i + 2) % 3])];
                }
                te
            })
            .collect();

        let mut mesh = Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            h: 0.0,
        };
        mesh.h = mesh_size(&mesh);
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn label(&self, t: usize) -> usize {
        self.triangles[t].label
    }

    /// Number of subdomain labels, `max label + 1`.
    pub fn num_labels(&self) -> usize {
        self.triangles.iter().map(|t| t.label).max().unwrap_or(0) + 1
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn geometry(&self, t: usize) -> AffineTriangle {
        AffineTriangle::new(self.triangle_points(t))
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.geometry(t).area()).sum()
    }

    /// Smallest interior angle over all elements, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| {
                let p = self.triangle_points(t);
                (0..3)
                    .map(|i| {
                        let a = p[(i + 1) % 3] - p[i];
                        let b = p[(i + 2) % 3] - p[i];
                        (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn edges_with_marker(&self, pred: impl Fn(EdgeMarker) -> bool) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| pred(e.marker))
    }
}

/// Maximum over triangles of the largest vertex-to-vertex distance.
pub fn mesh_size(mesh: &Mesh) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| mesh.geometry(t).diameter())
        .fold(0.0, f64::max)
}
