//! Legacy ASCII VTK unstructured-grid output.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesh::Mesh;
use crate::scheme::DiscreteState;
use crate::spaces::SpacePair;
use crate::verification::ExactSolution;

/// A named field evaluated as `f(element, x)`.
pub type CellField<'a> = (&'a str, Box<dyn Fn(usize, &Point) -> f64 + 'a>);

/// Writes the mesh with each field as cell data (value at the centroid) and
/// as point data (average of the element traces at each vertex).
pub fn write_vtk(w: &mut impl Write, mesh: &Mesh, title: &str, fields: &[CellField<'_>]) -> std::io::Result<()> {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or("interflow"))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nv} double")?;
    for v in mesh.vertices() {
        writeln!(w, "{:e} {:e} 0", v.x, v.y)?;
    }
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t.vertices[0], t.vertices[1], t.vertices[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    if fields.is_empty() {
        return Ok(());
    }
    writeln!(w, "CELL_DATA {nt}")?;
    writeln!(w, "SCALARS label int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in mesh.triangles() {
        writeln!(w, "{}", t.label)?;
    }
    for (name, f) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for t in 0..nt {
            writeln!(w, "{:e}", f(t, &mesh.geometry(t).centroid()))?;
        }
    }
    writeln!(w, "POINT_DATA {nv}")?;
    for (name, f) in fields {
        let mut sum = vec![0.0; nv];
        let mut count = vec![0usize; nv];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for &v in &tri.vertices {
                sum[v] += f(t, &mesh.vertices()[v]);
                count[v] += 1;
            }
        }
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for (s, c) in sum.iter().zip(&count) {
            writeln!(w, "{:e}", if *c > 0 { s / *c as f64 } else { 0.0 })?;
        }
    }
    Ok(())
}

/// `P`, `C` and `|U|` of a discrete state.
pub fn state_fields<'a>(spaces: &'a SpacePair, state: &'a DiscreteState) -> Vec<CellField<'a>> {
    let s = &spaces.scalar;
    vec![
        ("P", Box::new(move |t, x: &Point| s.eval(&state.pressure, t, x))),
        ("C", Box::new(move |t, x: &Point| s.eval(&state.concentration, t, x))),
        ("U_magnitude", Box::new(move |t, x: &Point| spaces.flux.eval(&state.velocity, t, x).0.norm())),
    ]
}

/// `p`, `c` and `|u|` of the exact solution at time `t`.
pub fn exact_fields<'a>(mesh: &'a Mesh, exact: &'a ExactSolution, t: f64) -> Vec<CellField<'a>> {
    vec![
        ("P", Box::new(move |e, x: &Point| exact.pressure(mesh.label(e), x))),
        ("C", Box::new(move |e, x: &Point| exact.concentration(mesh.label(e), x, t))),
        ("U_magnitude", Box::new(move |e, x: &Point| exact.velocity(mesh.label(e), x, t).norm())),
    ]
}

pub fn save_vtk(path: impl AsRef<Path>, mesh: &Mesh, title: &str, fields: &[CellField<'_>]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_vtk(&mut w, mesh, title, fields)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
