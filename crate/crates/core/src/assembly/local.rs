//! Element matrices, computed from edge integrals only.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as c64;
use thiserror::Error;

use crate::edgebasis::OrthogonalEdgeBasis;
use crate::geometry::Point;
use crate::quadrature::GaussLegendre;
use crate::wavespace::{edge_integral_pair, WaveFunction};

#[derive(Debug, Error, PartialEq)]
pub enum LocalError {
    #[error("G is numerically singular (condition {cond:e} > {limit:e}); k^2 may be close to a Neumann eigenvalue of the element")]
    SingularG { cond: f64, limit: f64 },
    #[error("element has no bulk waves")]
    NoWaves,
}

/// One side of an element: endpoints, outward unit normal and the edge basis living on it.
#[derive(Debug, Clone, Copy)]
pub struct Side<'a> {
    pub a: Point,
    pub b: Point,
    pub normal: Point,
    pub basis: &'a OrthogonalEdgeBasis,
}

#[derive(Debug, Clone)]
pub struct LocalElementMatrices {
    /// `G`, `D`, `B` with respect to the bulk waves, closed form.
    pub g: Mat<c64>,
    pub d: Mat<c64>,
    pub b: Mat<c64>,
    /// Reduced bulk basis, `waves x retained`.
    pub z: Mat<c64>,
    /// `Pi*` with respect to the bulk waves.
    pub pi_star: Mat<c64>,
    pub pi: Mat<c64>,
    /// Diagonal of the stabilization.
    pub s: Vec<f64>,
    pub a: Mat<c64>,
    /// 2-norm condition number of the reduced `G_z`.
    pub cond_g: f64,
    /// First local DOF of each side.
    pub offsets: Vec<usize>,
}

impl LocalElementMatrices {
    pub fn num_dofs(&self) -> usize {
        self.a.nrows()
    }
}

/// `G[(j, l)] = a_E(w_l, w_j) = sum_e conj(i kappa_j . n_e) (w_l, w_j)_e`.
///
/// Valid because every `w_j` solves the homogeneous Helmholtz equation, so
/// the volume term vanishes after integration by parts. The result is
/// symmetrized to remove rounding noise.
pub fn g_matrix(waves: &[WaveFunction], sides: &[(Point, Point, Point)]) -> Mat<c64> {
    let n = waves.len();
    let mut g = Mat::<c64>::zeros(n, n);
    for &(a, b, normal) in sides {
        for j in 0..n {
            let fj = waves[j].normal_factor(normal).conj();
            for l in 0..n {
                g[(j, l)] += fj * edge_integral_pair(&waves[l], &waves[j], a, b);
            }
        }
    }
    Mat::from_fn(n, n, |j, l| (g[(j, l)] + g[(l, j)].conj()) * 0.5)
}

/// Condition number from the singular values.
pub fn condition_number(m: &Mat<c64>) -> f64 {
    match m.svd() {
        Ok(svd) => {
            let s = svd.S().column_vector();
            let n = s.nrows();
            if n == 0 {
                return 1.0;
            }
            let max = (0..n).map(|i| s[i].re).fold(0.0, f64::max);
            let min = (0..n).map(|i| s[i].re).fold(f64::INFINITY, f64::min);
            if min <= 0.0 {
                f64::INFINITY
            } else {
                max / min
            }
        }
        Err(_) => f64::INFINITY,
    }
}

/// Edge moments `t[(j, l)] = (w_j, w_hat_l)_e` of every bulk wave against one edge basis.
pub fn edge_moments(waves: &[WaveFunction], basis: &OrthogonalEdgeBasis) -> Mat<c64> {
    let mut t = Mat::<c64>::zeros(waves.len(), basis.dim());
    for (j, w) in waves.iter().enumerate() {
        for (l, v) in basis.project(w).into_iter().enumerate() {
            t[(j, l)] = v;
        }
    }
    t
}

/// Samples of the bulk waves on the element boundary, one Gauss rule per side.
struct BoundarySamples {
    /// `sqrt(w_i) w_j(x_i)`.
    values: Mat<c64>,
    /// `sqrt(w_i) grad w_j(x_i) . n`.
    normal: Mat<c64>,
}

fn boundary_samples(waves: &[WaveFunction], sides: &[Side<'_>]) -> BoundarySamples {
    let kmax = waves.iter().map(|w| w.scale()).fold(0.0, f64::max);
    let mut pts = Vec::new();
    for side in sides {
        let h = side.a.dist(side.b);
        let n = 32usize.max(waves.len() + 8).max((2.0 * kmax * h).ceil() as usize + 20);
        for (t, w) in GaussLegendre::new(n).unit_interval() {
            pts.push((side.a.lerp(side.b, t), (w * h).sqrt(), side.normal));
        }
    }
    let values = Mat::<c64>::from_fn(pts.len(), waves.len(), |i, j| waves[j].eval(pts[i].0) * pts[i].1);
    let normal = Mat::<c64>::from_fn(pts.len(), waves.len(), |i, j| values[(i, j)] * waves[j].normal_factor(pts[i].2));
    BoundarySamples { values, normal }
}

/// Reduced bulk basis `z_i = sum_j Z[(j, i)] w_j`, orthonormal for the
/// impedance norm `k^-2 ||grad v . n + i k v||^2_{0, dE}`, which is a norm
/// on Trefftz functions for every `k > 0`. Directions whose singular value is
/// at most `bulk_filter` times the largest are dropped.
fn reduced_basis(samples: &BoundarySamples, k: f64, bulk_filter: f64) -> Mat<c64> {
    let ik = c64::new(0.0, k);
    let y = Mat::<c64>::from_fn(samples.values.nrows(), samples.values.ncols(), |i, j| {
        (samples.normal[(i, j)] + ik * samples.values[(i, j)]) / k
    });
    let nw = y.ncols();
    let Ok(svd) = y.thin_svd() else {
        return Mat::<c64>::identity(nw, nw);
    };
    let sv = svd.S().column_vector();
    let smax = (0..sv.nrows()).map(|i| sv[i].re).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.nrows()).filter(|&i| sv[i].re > bulk_filter * smax).collect();
    Mat::<c64>::from_fn(nw, keep.len(), |j, c| svd.V()[(j, keep[c])] / sv[keep[c]].re)
}

/// All element matrices.
///
/// With scaled DOFs `dof_(s,l)(v) = (1 / h_s) (v, w_hat_l)_{e_s}` and an
/// orthonormal edge basis, in terms of the bulk waves:
/// * `D[((s, l), j)] = t_s[(j, l)] / h_s`,
/// * `B[(j, (s, l))] = h_s conj(i kappa_j . n_s) conj(t_s[(j, l)])`,
///
/// and in terms of the reduced basis `Z`:
/// * `Pi*_z = G_z^-1 B_z` with `G_z = Z^H G Z`, `B_z = Z^H B`, `Pi = D Z Pi*_z`,
/// * `S = diag(a_E(Pi phi_i, Pi phi_i))`,
/// * `A = Pi*_z^H G_z Pi*_z + (I - Pi)^H S (I - Pi)`.
///
/// `G_z` is integrated from boundary samples of the reduced basis, which
/// keeps its rounding at `eps / bulk_filter` rather than the square of it.
pub fn local_matrices(
    waves: &[WaveFunction],
    k: f64,
    sides: &[Side<'_>],
    cond_limit: f64,
    bulk_filter: f64,
) -> Result<LocalElementMatrices, LocalError> {
    if waves.is_empty() {
        return Err(LocalError::NoWaves);
    }
    let nw = waves.len();
    let geo: Vec<(Point, Point, Point)> = sides.iter().map(|s| (s.a, s.b, s.normal)).collect();
    let g = g_matrix(waves, &geo);

    let mut offsets = Vec::with_capacity(sides.len());
    let mut np = 0;
    for s in sides {
        offsets.push(np);
        np += s.basis.dim();
    }
    let mut d = Mat::<c64>::zeros(np, nw);
    let mut b = Mat::<c64>::zeros(nw, np);
    for (side, &off) in sides.iter().zip(&offsets) {
        let h = side.a.dist(side.b);
        let t = edge_moments(waves, side.basis);
        for j in 0..nw {
            let f = waves[j].normal_factor(side.normal).conj() * h;
            for l in 0..side.basis.dim() {
                d[(off + l, j)] = t[(j, l)] / h;
                b[(j, off + l)] = f * t[(j, l)].conj();
            }
        }
    }

    let samples = boundary_samples(waves, sides);
    let z = reduced_basis(&samples, k, bulk_filter);
    let zv = &samples.values * &z;
    let zn = &samples.normal * &z;
    let gz = zv.adjoint() * &zn;
    let gz = Mat::<c64>::from_fn(gz.nrows(), gz.ncols(), |j, l| (gz[(j, l)] + gz[(l, j)].conj()) * 0.5);
    let cond_g = condition_number(&gz);
    if !(cond_g <= cond_limit) {
        return Err(LocalError::SingularG { cond: cond_g, limit: cond_limit });
    }
    let bz = z.adjoint() * &b;
    let pz = gz.full_piv_lu().solve(&bz);
    let pi_star = &z * &pz;
    let pi = &d * &pi_star;
    let gp = &gz * &pz;
    let s: Vec<f64> = (0..np)
        .map(|i| (0..pz.nrows()).map(|j| pz[(j, i)].conj() * gp[(j, i)]).sum::<c64>().re)
        .collect();
    let i_minus_pi = Mat::<c64>::from_fn(np, np, |r, c| if r == c { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) } - pi[(r, c)]);
    let s_imp = Mat::<c64>::from_fn(np, np, |r, c| i_minus_pi[(r, c)] * s[r]);
    let a = pz.adjoint() * &gp + i_minus_pi.adjoint() * &s_imp;
    Ok(LocalElementMatrices { g, d, b, z, pi_star, pi, s, a, cond_g, offsets })
}
