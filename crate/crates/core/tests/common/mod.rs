#![allow(dead_code)]

use std::sync::Arc;

use interflow::geometry::{AffineTriangle, Point};
use interflow::mesh::{DiskInterfaceMesh, Mesh, Triangle};
use interflow::quadrature::Quadrature;

pub fn disk(m: usize) -> Arc<Mesh> {
    Arc::new(DiskInterfaceMesh::new(m).generate().unwrap())
}

pub fn reference_triangle() -> Arc<Mesh> {
    Arc::new(
        Mesh::from_triangles(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![Triangle {
                vertices: [0, 1, 2],
                label: 0,
            }],
        )
        .unwrap(),
    )
}

/// Physical quadrature points and weights of one element.
pub fn points(geo: &AffineTriangle, quad: &Quadrature) -> Vec<(Point, f64)> {
    quad.points
        .iter()
        .zip(&quad.weights)
        .map(|(p, w)| (geo.map(p), w * geo.det.abs()))
        .collect()
}

/// Element containing `x` whose label is `label`, by brute force.
pub fn locate(mesh: &Mesh, label: usize, x: &Point) -> usize {
    (0..mesh.num_triangles())
        .filter(|&t| mesh.label(t) == label)
        .find(|&t| mesh.geometry(t).barycentric(x).iter().all(|&l| l >= -1e-10))
        .unwrap_or_else(|| panic!("no element with label {label} contains {x:?}"))
}

/// Least-squares slope of log(err) against log(1/M).
pub fn slope(ms: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ms.iter().map(|&m| (1.0 / m as f64).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
