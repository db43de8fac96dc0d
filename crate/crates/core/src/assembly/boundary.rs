//! Impedance terms on boundary edges.

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::analytic::ImpedanceData;
use crate::edgebasis::OrthogonalEdgeBasis;
use crate::geometry::Point;
use crate::quadrature::GaussLegendre;

/// Minimum number of Gauss points per boundary edge for the right-hand side.
pub const MIN_RHS_POINTS: usize = 32;

/// Splits `[a, b]` at `y = 0` when it crosses the interface.
pub fn split_at_interface(a: Point, b: Point) -> Vec<(Point, Point)> {
    if a.y * b.y < 0.0 {
        let t = a.y / (a.y - b.y);
        let p = Point::new(a.x + t * (b.x - a.x), 0.0);
        vec![(a, p), (p, b)]
    } else {
        vec![(a, b)]
    }
}

/// Robin matrix `R[(m, l)] = (K Pi0 phi_l, Pi0 phi_m)_e = h^2 (K w_hat_l, w_hat_m)_e`.
///
/// For constant `K` on the edge this is `K h^2 I`; an edge crossing the
/// interface is split and each piece integrated from sampled traces.
pub fn robin_matrix(basis: &OrthogonalEdgeBasis, data: &dyn ImpedanceData) -> Mat<c64> {
    let h = basis.length();
    let n = basis.dim();
    let pieces = split_at_interface(basis.a, basis.b);
    if pieces.len() == 1 {
        let k = data.wavenumber(basis.a.lerp(basis.b, 0.5));
        return Mat::from_fn(n, n, |i, j| if i == j { c64::from(k * h * h) } else { c64::new(0.0, 0.0) });
    }
    let mut r = Mat::<c64>::zeros(n, n);
    for (p, q) in pieces {
        let k = data.wavenumber(p.lerp(q, 0.5));
        let m = basis.sampled_gram(p, q);
        for i in 0..n {
            for j in 0..n {
                r[(i, j)] += m[(i, j)] * (k * h * h);
            }
        }
    }
    r
}

/// Number of Gauss points for an edge of length `h` and wavenumber scale `k`.
pub fn rhs_points(k: f64, h: f64) -> usize {
    MIN_RHS_POINTS.max((3.0 * k * h).ceil() as usize)
}

/// Load vector `F[l] = (g, Pi0 phi_l)_e = h (g, w_hat_l)_e` by Gauss-Legendre quadrature.
pub fn rhs_vector(basis: &OrthogonalEdgeBasis, normal: Point, data: &dyn ImpedanceData, points: usize) -> Vec<c64> {
    let h = basis.length();
    let gl = GaussLegendre::new(points);
    let mut f = vec![c64::new(0.0, 0.0); basis.dim()];
    for (p, q) in split_at_interface(basis.a, basis.b) {
        let len = p.dist(q);
        for (t, w) in gl.unit_interval() {
            let x = p.lerp(q, t);
            let g = data.datum(x, normal) * (w * len * h);
            for (l, fl) in f.iter_mut().enumerate() {
                *fl += g * basis.eval(l, x).conj();
            }
        }
    }
    f
}
