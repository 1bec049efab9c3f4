//! Quadrature on the reference triangle `(0,0), (1,0), (0,1)` and the unit
//! interval.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules: all weights are positive and a rule of order `q` integrates every
//! polynomial of total degree `q` exactly.

use crate::error::{Error, Result};
use crate::geometry::Point;

pub const MAX_ORDER: usize = 10;

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub order: usize,
    /// Points on the reference triangle; weights sum to 1/2.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Points on [0, 1]; weights sum to 1.
    pub edge_points: Vec<f64>,
    pub edge_weights: Vec<f64>,
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Builds the triangle and edge rules exact to polynomial degree `order`.
pub fn build_quadrature(order: usize) -> Result<Quadrature> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "quadrature order must be in [1, {MAX_ORDER}], got {order}"
        )));
    }
    // x = s (1 - t), y = t with Jacobian (1 - t): the t-integrand has degree
    // order + 1, the s-integrand degree order.
    let n_t = (order + 3) / 2;
    let n_s = (order + 2) / 2;
    let (s_nodes, s_weights) = gauss_legendre(n_s);
    let (t_nodes, t_weights) = gauss_legendre(n_t);
    let mut points = Vec::with_capacity(n_s * n_t);
    let mut weights = Vec::with_capacity(n_s * n_t);
    for (t, wt) in t_nodes.iter().zip(&t_weights) {
        for (s, ws) in s_nodes.iter().zip(&s_weights) {
            points.push(Point::new(s * (1.0 - t), *t));
            weights.push(ws * wt * (1.0 - t));
        }
    }
    let (edge_points, edge_weights) = gauss_legendre((order + 2) / 2);
    Ok(Quadrature {
        order,
        points,
        weights,
        edge_points,
        edge_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Closed form: integral of x^a y^b over the reference triangle is a! b! / (a + b + 2)!.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn second_order_moments() {
        let q = build_quadrature(2).unwrap();
        let integrate = |f: &dyn Fn(&Point) -> f64| -> f64 {
            q.points.iter().zip(&q.weights).map(|(p, w)| w * f(p)).sum()
        };
        assert!((integrate(&|p| p.x * p.x) - 1.0 / 12.0).abs() < 1e-15);
        assert!((integrate(&|p| p.x * p.y) - 1.0 / 24.0).abs() < 1e-15);
        assert!((integrate(&|p| p.y * p.y) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn first_order_weights_sum_to_reference_area() {
        let q = build_quadrature(1).unwrap();
        assert!((q.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_cubic() {
        let q = build_quadrature(3).unwrap();
        let v: f64 = q.edge_points.iter().zip(&q.edge_weights).map(|(t, w)| w * t.powi(3)).sum();
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_on_all_monomials_up_to_order() {
        for order in 1..=MAX_ORDER {
            let q = build_quadrature(order).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for a in 0..=order as u32 {
                for b in 0..=(order as u32 - a) {
                    let v: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32))
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!((v - exact).abs() <= 1e-14 * exact.max(1e-3), "order {order}: x^{a} y^{b}");
                }
            }
            for k in 0..=order as i32 {
                let v: f64 = q.edge_points.iter().zip(&q.edge_weights).map(|(t, w)| w * t.powi(k)).sum();
                assert!((v - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "edge order {order}: t^{k}");
            }
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(build_quadrature(0).is_err());
        assert!(build_quadrature(11).is_err());
    }
}
