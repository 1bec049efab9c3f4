//! Browser bindings: mesh generation, a short manufactured run and the
//! dispersion tensor of a single velocity.
//!
//! The plain-Rust functions carry the logic and are tested natively; the
//! `#[wasm_bindgen]` items only convert errors for JavaScript.

use std::sync::Arc;

use interflow::coefficients::{DispersionParams, MediumModel};
use interflow::geometry::{Point, Vec2};
use interflow::mesh::{DiskInterfaceMesh, EdgeMarker, Mesh};
use interflow::scheme::{DiscreteState, Scheme, TimeGrid};
use interflow::verification::{final_errors, manufactured_problem, ExactSolution};
use wasm_bindgen::prelude::*;

/// Flat arrays for drawing a triangulation.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct MeshView {
    vertices: Vec<f64>,
    triangles: Vec<u32>,
    labels: Vec<u32>,
    interface: Vec<u32>,
    summary: String,
}

#[wasm_bindgen]
impl MeshView {
    /// `x0, y0, x1, y1, ...`
    #[wasm_bindgen(getter)]
    pub fn vertices(&self) -> Vec<f64> {
        self.vertices.clone()
    }

    /// Three vertex indices per triangle.
    #[wasm_bindgen(getter)]
    pub fn triangles(&self) -> Vec<u32> {
        self.triangles.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn labels(&self) -> Vec<u32> {
        self.labels.clone()
    }

    /// Two vertex indices per interface edge.
    #[wasm_bindgen(getter)]
    pub fn interface(&self) -> Vec<u32> {
        self.interface.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

impl MeshView {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        let vertices = mesh.vertices().iter().flat_map(|p| [p.x, p.y]).collect();
        let triangles = mesh.triangles().iter().flat_map(|t| t.vertices.map(|v| v as u32)).collect();
        let labels = mesh.triangles().iter().map(|t| t.label as u32).collect();
        let interface = mesh
            .edges_with_marker(|m| matches!(m, EdgeMarker::Interface(_)))
            .flat_map(|e| e.vertices.map(|v| v as u32))
            .collect();
        let summary = format!(
            "{} triangles, {} vertices, h = {:.3}, min angle {:.1} deg",
            mesh.num_triangles(),
            mesh.num_vertices(),
            mesh.h(),
            mesh.min_angle_deg()
        );
        Self {
            vertices,
            triangles,
            labels,
            interface,
            summary,
        }
    }

    pub fn num_triangles(&self) -> usize {
        self.labels.len()
    }
}

pub fn build_mesh(boundary_nodes: usize, seed: u64) -> Result<MeshView, String> {
    DiskInterfaceMesh::new(boundary_nodes)
        .with_seed(seed)
        .generate()
        .map(|m| MeshView::from_mesh(&m))
        .map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn generate_mesh(boundary_nodes: u32, seed: u32) -> Result<MeshView, JsError> {
    build_mesh(boundary_nodes as usize, seed.into()).map_err(|e| JsError::new(&e))
}

/// Manufactured run advanced one level at a time.
#[wasm_bindgen]
pub struct Simulation {
    scheme: Scheme,
    exact: Arc<ExactSolution>,
    state: DiscreteState,
    view: MeshView,
}

impl Simulation {
    pub fn create(boundary_nodes: usize, steps: usize, final_time: f64) -> Result<Self, String> {
        let run = || -> interflow::Result<Self> {
            let mesh = Arc::new(DiskInterfaceMesh::new(boundary_nodes).generate()?);
            let exact = Arc::new(ExactSolution::default());
            let problem = manufactured_problem(mesh.clone(), 1, exact.clone())?;
            let scheme = Scheme::new(problem, TimeGrid::new(final_time, steps)?)?;
            let c0 = |l: usize, x: &Point| exact.concentration(l, x, 0.0);
            let (state, _) = scheme.initialize(&c0)?;
            Ok(Self {
                scheme,
                exact,
                state,
                view: MeshView::from_mesh(&mesh),
            })
        };
        run().map_err(|e| e.to_string())
    }

    /// Advances one level; returns false once the final time is reached.
    pub fn advance(&mut self) -> Result<bool, String> {
        if self.state.n >= self.scheme.grid().steps {
            return Ok(false);
        }
        let (next, _) = self.scheme.step(&self.state).map_err(|e| e.to_string())?;
        self.state = next;
        Ok(true)
    }

    fn per_triangle(&self, f: impl Fn(usize, &Point) -> f64) -> Vec<f64> {
        let mesh = self.scheme.problem().spaces.mesh();
        (0..mesh.num_triangles()).map(|t| f(t, &mesh.geometry(t).centroid())).collect()
    }

    pub fn error_norms(&self) -> Result<(f64, f64), String> {
        let (eu, ec, _) =
            final_errors(&self.scheme.problem().spaces, &self.exact, &self.state).map_err(|e| e.to_string())?;
        Ok((eu, ec))
    }
}

#[wasm_bindgen]
impl Simulation {
    #[wasm_bindgen(constructor)]
    pub fn new(boundary_nodes: u32, steps: u32, final_time: f64) -> Result<Simulation, JsError> {
        Self::create(boundary_nodes as usize, steps as usize, final_time).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self) -> Result<bool, JsError> {
        self.advance().map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(getter)]
    pub fn level(&self) -> u32 {
        self.state.n as u32
    }

    #[wasm_bindgen(getter)]
    pub fn time(&self) -> f64 {
        self.state.time
    }

    #[wasm_bindgen(getter)]
    pub fn mesh(&self) -> MeshView {
        self.view.clone()
    }

    /// Discrete concentration at each triangle centroid.
    pub fn concentration(&self) -> Vec<f64> {
        let s = &self.scheme.problem().spaces.scalar;
        self.per_triangle(|t, x| s.eval(&self.state.concentration, t, x))
    }

    /// Exact concentration at each triangle centroid.
    pub fn exact_concentration(&self) -> Vec<f64> {
        let mesh = self.scheme.problem().spaces.mesh().clone();
        let t = self.state.time;
        self.per_triangle(|e, x| self.exact.concentration(mesh.label(e), x, t))
    }

    /// Darcy speed `|U|` at each triangle centroid.
    pub fn speed(&self) -> Vec<f64> {
        let f = &self.scheme.problem().spaces.flux;
        self.per_triangle(|t, x| f.eval(&self.state.velocity, t, x).0.norm())
    }

    /// `[‖U - u‖, ‖C - c‖]` at the current level.
    pub fn errors(&self) -> Result<Vec<f64>, JsError> {
        self.error_norms().map(|(u, c)| vec![u, c]).map_err(|e| JsError::new(&e))
    }
}

/// Eigenvalues `(small, large)` of the dispersion tensor and the angle of
/// the large one's eigenvector, for porosity `phi` and velocity `(ux, uy)`.
pub fn dispersion_axes(phi: f64, params: DispersionParams, ux: f64, uy: f64) -> Result<[f64; 3], String> {
    let model = MediumModel {
        porosity: vec![phi],
        permeability: vec![1.0],
        dispersion: params,
        ..MediumModel::two_phase_inclusion()
    };
    model.validate().map_err(|e| e.to_string())?;
    let d = model.dispersion_tensor(0, &Vec2::new(ux, uy));
    let [lo, hi] = d.eigenvalues();
    let v = d.eigenvectors()[1];
    Ok([lo, hi, v.y.atan2(v.x)])
}

#[wasm_bindgen]
pub fn dispersion_ellipse(
    phi: f64,
    d0: f64,
    alpha1: f64,
    alpha2: f64,
    ux: f64,
    uy: f64,
) -> Result<Vec<f64>, JsError> {
    let params = DispersionParams {
        d0,
        alpha1,
        alpha2,
        ..DispersionParams::default()
    };
    dispersion_axes(phi, params, ux, uy).map(|a| a.to_vec()).map_err(|e| JsError::new(&e))
}
