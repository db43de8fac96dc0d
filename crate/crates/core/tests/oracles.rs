//! Closed-form integrals and element matrices against quadrature oracles.

mod common;

use nctvem::geometry::Point;
use nctvem::wavespace::{edge_integral_pair, WaveFunction};
use num_complex::Complex64 as c64;

#[test]
fn edge_integrals_match_gauss_legendre() {
    let worst = common::edge_integral_deviation(1000);
    assert!(worst < 1e-12, "worst relative deviation {worst:e}");
}

#[test]
fn parallel_traces_hit_the_series_branch() {
    let w = WaveFunction::plane(9.0, Point::new(0.0, 1.0), Point::new(0.0, 0.0));
    let a = Point::new(-0.3, 0.2);
    let b = Point::new(0.6, 0.2);
    let closed = edge_integral_pair(&w, &w, a, b);
    assert!((closed - c64::from(0.9)).norm() < 1e-15);
}

#[test]
fn element_matrices_match_quadrature() {
    let (wg, wd, wb) = common::element_matrix_deviation(200);
    assert!(wg < 1e-10, "G deviation {wg:e}");
    assert!(wd < 1e-10, "D deviation {wd:e}");
    assert!(wb < 1e-10, "B deviation {wb:e}");
}
