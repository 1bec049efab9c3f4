//! Small affine-geometry helpers shared by the mesh and the spaces.

use nalgebra::{Matrix2, Point2, Vector2};

pub type Point = Point2<f64>;
pub type Vec2 = Vector2<f64>;

/// Twice the signed area of the triangle `(a, b, c)`; positive when
/// counter-clockwise.
pub fn orient2d(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Affine map from the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Debug, Clone)]
pub struct AffineTriangle {
    pub vertices: [Point; 3],
    pub jacobian: Matrix2<f64>,
    pub inverse: Matrix2<f64>,
    pub det: f64,
}

impl AffineTriangle {
    pub fn new(vertices: [Point; 3]) -> Self {
        let e1 = vertices[1] - vertices[0];
        let e2 = vertices[2] - vertices[0];
        let jacobian = Matrix2::new(e1.x, e2.x, e1.y, e2.y);
        let det = jacobian.determinant();
        let inverse = jacobian.try_inverse().unwrap_or_else(Matrix2::zeros);
        Self {
            vertices,
            jacobian,
            inverse,
            det,
        }
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    pub fn map(&self, reference: &Point) -> Point {
        self.vertices[0] + self.jacobian * reference.coords
    }

    pub fn barycentric(&self, x: &Point) -> [f64; 3] {
        let r = self.inverse * (x - self.vertices[0]);
        [1.0 - r.x - r.y, r.x, r.y]
    }

    pub fn centroid(&self) -> Point {
        Point::from((self.vertices[0].coords + self.vertices[1].coords + self.vertices[2].coords) / 3.0)
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        (a - b).norm().max((b - c).norm()).max((c - a).norm())
    }

    /// Gradients of the barycentric coordinates (constant on the element).
    pub fn barycentric_gradients(&self) -> [Vec2; 3] {
        let g1 = Vec2::new(self.inverse[(0, 0)], self.inverse[(0, 1)]);
        let g2 = Vec2::new(self.inverse[(1, 0)], self.inverse[(1, 1)]);
        [-g1 - g2, g1, g2]
    }
}

/// Crossing-number point-in-polygon test.
pub fn point_in_polygon(p: &Point, polygon: &[Point]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}
