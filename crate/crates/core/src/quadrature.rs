//! Gauss-Legendre rules on intervals and collapsed product rules on triangles.
//!
//! Assembly never integrates numerically; these rules are used for the
//! impedance right-hand side, for error reporting, and as independent oracles
//! in tests.

use num_complex::Complex64 as c64;
use std::f64::consts::PI;

use crate::geometry::Point;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    ///
    /// Nodes are found by Newton iteration on the three-term recurrence,
    /// started from the Tricomi approximation.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[0, 1]`.
    pub fn unit_interval(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (0.5 * (x + 1.0), 0.5 * w))
    }

    /// Integrates `f` along the straight segment from `a` to `b` (arc length measure).
    pub fn integrate_segment<F>(&self, a: Point, b: Point, mut f: F) -> c64
    where
        F: FnMut(Point) -> c64,
    {
        let len = a.dist(b);
        let mut acc = c64::new(0.0, 0.0);
        for (t, w) in self.unit_interval() {
            acc += f(a.lerp(b, t)) * w;
        }
        acc * len
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Collapsed (Duffy) product rule on triangles.
///
/// With `n` Gauss points per direction the rule integrates polynomials of
/// total degree `2n - 2` exactly.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    /// Barycentric-free reference points `(s, t)` in the unit triangle and weights summing to 1/2.
    points: Vec<(f64, f64, f64)>,
}

impl TriangleRule {
    pub fn new(points_per_direction: usize) -> Self {
        let gl = GaussLegendre::new(points_per_direction);
        let mut points = Vec::with_capacity(points_per_direction * points_per_direction);
        for (u, wu) in gl.unit_interval() {
            for (v, wv) in gl.unit_interval() {
                points.push((u, v * (1.0 - u), wu * wv * (1.0 - u)));
            }
        }
        Self { points }
    }

    /// Rule exact at least up to the given total polynomial degree.
    pub fn with_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over the triangle `(a, b, c)`; orientation does not matter.
    pub fn integrate<T, F>(&self, a: Point, b: Point, c: Point, mut f: F) -> T
    where
        T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
        F: FnMut(Point) -> T,
    {
        let jac = ((b - a).cross(c - a)).abs();
        let mut acc = T::default();
        for &(s, t, w) in &self.points {
            let x = a + (b - a) * s + (c - a) * t;
            acc += f(x) * (w * jac);
        }
        acc
    }

    /// Integrates over the triangle split uniformly into `splits^2` congruent pieces.
    pub fn integrate_subdivided<T, F>(&self, a: Point, b: Point, c: Point, splits: usize, mut f: F) -> T
    where
        T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
        F: FnMut(Point) -> T,
    {
        let splits = splits.max(1);
        let m = splits as f64;
        let node = |i: usize, j: usize| a + (b - a) * (i as f64 / m) + (c - a) * (j as f64 / m);
        let mut acc = T::default();
        for i in 0..splits {
            for j in 0..splits - i {
                acc += self.integrate(node(i, j), node(i + 1, j), node(i, j + 1), &mut f);
                if i + j + 1 < splits {
                    acc += self.integrate(node(i + 1, j), node(i + 1, j + 1), node(i, j + 1), &mut f);
                }
            }
        }
        acc
    }
}
