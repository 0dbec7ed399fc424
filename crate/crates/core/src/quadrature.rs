//! Gauss-Legendre rules on intervals and triangles.

use std::f64::consts::PI;

use crate::mesh::Point;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels.
pub fn composite_interval(a: f64, b: f64, panels: usize, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut x = Vec::with_capacity(panels * order);
    let mut w = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * width;
        for (xi, wi) in gx.iter().zip(&gw) {
            x.push(lo + 0.5 * width * (xi + 1.0));
            w.push(0.5 * width * wi);
        }
    }
    (x, w)
}

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)` in
/// barycentric-free form: points `(s, t)` and weights summing to 1 (so the
/// physical weight is `w * |T|`).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed (Duffy) tensor Gauss-Legendre rule, exact for polynomials of
    /// degree `2 order - 2`.
    pub fn collapsed(order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for (xa, wa) in gx.iter().zip(&gw) {
            let a = 0.5 * (xa + 1.0);
            for (xb, wb) in gx.iter().zip(&gw) {
                let b = 0.5 * (xb + 1.0);
                points.push([a, b * (1.0 - a)]);
                // area element (1 - a), factor 1/4 from the map, normalised by |T_ref| = 1/2
                weights.push(wa * wb * 0.25 * (1.0 - a) * 2.0);
            }
        }
        TriangleRule { points, weights }
    }

    /// Symmetric three-point interior rule, exact for quadratics.
    pub fn three_point() -> Self {
        TriangleRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 3.0; 3],
        }
    }

    /// Physical points of the rule mapped onto triangle `(a, b, c)`.
    pub fn map(&self, [a, b, c]: [Point; 3]) -> Vec<Point> {
        self.points
            .iter()
            .map(|&[s, t]| [a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])])
            .collect()
    }

    /// `∫_T f` for triangle with vertices `v` and area `area`.
    pub fn integrate<F: FnMut(Point) -> f64>(&self, v: [Point; 3], area: f64, mut f: F) -> f64 {
        self.map(v).into_iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum::<f64>() * area
    }
}
