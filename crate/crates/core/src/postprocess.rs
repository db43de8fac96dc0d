//! Projected discrete solution and relative error norms.

use std::io::Write;

use num_complex::Complex64 as c64;
use rayon::prelude::*;

use crate::analytic::InterfaceProblem;
use crate::assembly::Solution;
use crate::geometry::{self, Point};
use crate::mesh::{PolygonMesh, Subdomain};
use crate::quadrature::TriangleRule;
use crate::wavespace::{CVec2, ElementWaveBasis};

/// Default polynomial degree of the triangle rule.
pub const DEFAULT_RULE_DEGREE: usize = 20;

/// Integrates `f` over a polygon star-shaped with respect to `center`, by a
/// fan of triangles each split into `splits^2` pieces.
pub fn polygon_quadrature<T, F>(poly: &[Point], center: Point, rule: &TriangleRule, splits: usize, mut f: F) -> T
where
    T: Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    F: FnMut(Point) -> T,
{
    let n = poly.len();
    let mut acc = T::default();
    for i in 0..n {
        acc += rule.integrate_subdivided(center, poly[i], poly[(i + 1) % n], splits, &mut f);
    }
    acc
}

/// Subdivision count so that each sub-triangle has `K * diam <= 2`.
pub fn splits_for(k: f64, diameter: f64) -> usize {
    ((k * diameter / 2.0).ceil() as usize).max(1)
}

/// `Pi u_h` on every element, as coefficients of the element's bulk waves.
#[derive(Debug, Clone)]
pub struct ProjectedSolution {
    pub bases: Vec<ElementWaveBasis>,
    pub coeffs: Vec<Vec<c64>>,
}

impl ProjectedSolution {
    pub fn new(mesh: &PolygonMesh, sol: &Solution) -> Self {
        let coeffs = (0..mesh.num_elements()).map(|e| sol.projected_coefficients(mesh, e)).collect();
        Self { bases: sol.bases.clone(), coeffs }
    }

    pub fn eval_on(&self, element: usize, x: Point) -> (c64, CVec2) {
        self.bases[element].eval_combination(&self.coeffs[element], x)
    }

    /// Value at `x`, using the first element whose closure contains it.
    pub fn eval(&self, mesh: &PolygonMesh, x: Point) -> Option<c64> {
        locate(mesh, x).map(|e| self.eval_on(e, x).0)
    }
}

/// First element whose closure contains `x`.
pub fn locate(mesh: &PolygonMesh, x: Point) -> Option<usize> {
    let tol = 1e-12;
    mesh.elements().iter().position(|el| {
        if x.x < el.bbox[0] - tol || x.x > el.bbox[1] + tol || x.y < el.bbox[2] - tol || x.y > el.bbox[3] + tol {
            return false;
        }
        let n = el.vertices.len();
        (0..n).all(|i| {
            let a = mesh.vertices()[el.vertices[i]];
            let b = mesh.vertices()[el.vertices[(i + 1) % n]];
            (b - a).cross(x - a) >= -tol * (b - a).norm()
        })
    })
}

/// Squared error contributions of one element.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ElementError {
    /// `|u - Pi u_h|_1^2`.
    pub semi_sq: f64,
    /// `||u - Pi u_h||_0^2`.
    pub l2_sq: f64,
    /// Basis wavenumber used in the weighted norm.
    pub k: f64,
    /// `|u|_1^2 + K^2 ||u||_0^2` with the physical wavenumber.
    pub exact_h1_sq: f64,
    pub exact_l2_sq: f64,
}

impl ElementError {
    /// `||u - Pi u_h||_{1,k,E}^2`.
    pub fn weighted_sq(&self) -> f64 {
        self.semi_sq + self.k * self.k * self.l2_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub err_h1_rel: f64,
    pub err_l2_rel: f64,
    pub exact_h1: f64,
    pub exact_l2: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc([f64; 4]);

impl std::ops::AddAssign for Acc {
    fn add_assign(&mut self, o: Acc) {
        for i in 0..4 {
            self.0[i] += o.0[i];
        }
    }
}

impl std::ops::Mul<f64> for Acc {
    type Output = Acc;
    fn mul(self, s: f64) -> Acc {
        Acc(self.0.map(|v| v * s))
    }
}

/// Per-element error contributions. Elements cut by the interface are
/// integrated separately on each side so the exact solution is smooth on
/// every quadrature piece.
pub fn element_errors(
    mesh: &PolygonMesh,
    projected: &ProjectedSolution,
    problem: &InterfaceProblem,
    rule_degree: usize,
) -> Vec<ElementError> {
    let rule = TriangleRule::with_degree(rule_degree);
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| {
            let el = mesh.element(id);
            let basis = &projected.bases[id];
            let kmax = basis.waves.iter().map(|w| w.scale()).fold(problem.k1().max(problem.k2()), f64::max);
            let poly = mesh.polygon(id);
            let pieces = if el.subdomain == Subdomain::Cut {
                vec![geometry::clip_half_plane(&poly, false), geometry::clip_half_plane(&poly, true)]
            } else {
                vec![poly]
            };
            let mut acc = Acc::default();
            for piece in pieces.into_iter().filter(|p| !p.is_empty()) {
                let center = geometry::centroid(&piece);
                let splits = splits_for(kmax, geometry::diameter(&piece));
                let upper = center.y > 0.0;
                let kphys = if upper { problem.k2() } else { problem.k1() };
                acc += polygon_quadrature(&piece, center, &rule, splits, |x| {
                    let (u, gu) = problem.eval_with_grad_in(x, upper);
                    let (v, gv) = projected.eval_on(id, x);
                    let du = (gu[0] - gv[0]).norm_sqr() + (gu[1] - gv[1]).norm_sqr();
                    let eu = (u - v).norm_sqr();
                    let nu = u.norm_sqr();
                    Acc([du, eu, gu[0].norm_sqr() + gu[1].norm_sqr() + kphys * kphys * nu, nu])
                });
            }
            ElementError { semi_sq: acc.0[0], l2_sq: acc.0[1], k: basis.k, exact_h1_sq: acc.0[2], exact_l2_sq: acc.0[3] }
        })
        .collect()
}

/// Relative weighted `H^1` and `L^2` errors of `Pi u_h`.
pub fn compute_errors(mesh: &PolygonMesh, projected: &ProjectedSolution, problem: &InterfaceProblem, rule_degree: usize) -> ErrorReport {
    let per = element_errors(mesh, projected, problem, rule_degree);
    let num_h1: f64 = per.iter().map(|e| e.weighted_sq()).sum();
    let num_l2: f64 = per.iter().map(|e| e.l2_sq).sum();
    let den_h1: f64 = per.iter().map(|e| e.exact_h1_sq).sum();
    let den_l2: f64 = per.iter().map(|e| e.exact_l2_sq).sum();
    ErrorReport {
        err_h1_rel: (num_h1 / den_h1).sqrt(),
        err_l2_rel: (num_l2 / den_l2).sqrt(),
        exact_h1: den_h1.sqrt(),
        exact_l2: den_l2.sqrt(),
    }
}

/// `x,y,re_exact,im_exact,re_h,im_h` on an `n x n` grid of cell centres.
pub fn write_raster<W: Write>(
    mesh: &PolygonMesh,
    projected: &ProjectedSolution,
    problem: &InterfaceProblem,
    n: usize,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "x,y,re_exact,im_exact,re_h,im_h")?;
    for j in 0..n {
        for i in 0..n {
            let x = Point::new(-1.0 + (2 * i + 1) as f64 / n as f64, -1.0 + (2 * j + 1) as f64 / n as f64);
            let u = problem.eval(x);
            let v = projected.eval(mesh, x).unwrap_or(c64::new(f64::NAN, f64::NAN));
            writeln!(w, "{},{},{:e},{:e},{:e},{:e}", x.x, x.y, u.re, u.im, v.re, v.im)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_area() {
        let poly = vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.5, 1.0), Point::new(1.0, 2.0), Point::new(-0.5, 1.0)];
        let rule = TriangleRule::with_degree(DEFAULT_RULE_DEGREE);
        let area: f64 = polygon_quadrature(&poly, geometry::centroid(&poly), &rule, 2, |_| 1.0);
        assert!((area - geometry::signed_area(&poly)).abs() < 1e-14);
    }

    #[test]
    fn locate_finds_containing_element() {
        let m = crate::mesh::generate_cartesian(2).unwrap();
        assert_eq!(locate(&m, Point::new(-0.5, -0.5)), Some(0));
        assert_eq!(locate(&m, Point::new(0.5, 0.5)), Some(3));
        assert_eq!(locate(&m, Point::new(1.5, 0.5)), None);
    }
}
