//! Edge trace spaces and their orthonormal, filtered bases.
//!
//! Every edge collects the traces of all waves of its adjacent elements. The
//! Gram matrix `G0` of these traces is diagonalized; eigenvectors with
//! eigenvalue at most `sigma` are dropped and the rest are scaled by
//! `1 / sqrt(lambda)`, giving an `L^2(e)`-orthonormal basis `w_hat`.
//!
//! The eigenpairs are taken from the SVD of a quadrature factor `V` with
//! `V^H V = G0`. Retained eigenvalues go down to `1e-13`, where an
//! eigensolver applied to `G0` itself loses about `eps / lambda` of accuracy
//! in the eigenvectors; the factor only loses `eps / sqrt(lambda)`.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Point;
use crate::mesh::PolygonMesh;
use crate::wavespace::{edge_integral_pair, ElementWaveBasis, WaveFunction};

/// Default eigenvalue cut-off.
pub const DEFAULT_SIGMA: f64 = 1e-13;

/// Allowed Hermitian defect of the trace Gram matrix, relative to its largest entry.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum EdgeBasisError {
    #[error("edge {edge}: no candidate traces")]
    NoCandidates { edge: usize },
    #[error("edge {edge}: trace Gram matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { edge: usize, defect: f64 },
    #[error("edge {edge}: every eigenvalue is below the filter tolerance {sigma:e}")]
    AllFiltered { edge: usize, sigma: f64 },
    #[error("edge {edge}: eigendecomposition failed")]
    Eigen { edge: usize },
}

#[derive(Debug, Clone)]
pub struct OrthogonalEdgeBasis {
    pub edge: usize,
    pub a: Point,
    pub b: Point,
    /// Candidate traces `nu_r` (as bulk waves restricted to the edge).
    pub candidates: Vec<WaveFunction>,
    /// `rho x p_hat`, `w_hat_l = sum_r coeffs[(r, l)] nu_r`.
    pub coeffs: Mat<c64>,
    /// Retained eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// All eigenvalues of the Gram matrix, ascending.
    pub spectrum: Vec<f64>,
}

impl OrthogonalEdgeBasis {
    pub fn rho(&self) -> usize {
        self.candidates.len()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// `w_hat_l(x)`.
    pub fn eval(&self, l: usize, x: Point) -> c64 {
        self.candidates.iter().enumerate().map(|(r, nu)| self.coeffs[(r, l)] * nu.eval(x)).sum()
    }

    /// `<w, w_hat_l>_e` for every `l`.
    pub fn project(&self, w: &WaveFunction) -> Vec<c64> {
        let t: Vec<c64> = self.candidates.iter().map(|nu| edge_integral_pair(w, nu, self.a, self.b)).collect();
        (0..self.dim()).map(|l| t.iter().enumerate().map(|(r, &v)| self.coeffs[(r, l)].conj() * v).sum()).collect()
    }

    /// Gram matrix `(w_hat_l, w_hat_j)_e` of the retained basis from the
    /// closed-form `G0`. Rounding in this product is of order
    /// `eps |G0| / lambda_min`.
    pub fn gram(&self) -> Mat<c64> {
        let g0 = trace_gram(&self.candidates, self.a, self.b);
        self.coeffs.adjoint() * &g0 * &self.coeffs
    }

    /// The same Gram matrix from sampled values of `w_hat` on the sub-segment `[p, q]` of the edge.
    pub fn sampled_gram(&self, p: Point, q: Point) -> Mat<c64> {
        let vq = trace_factor(&self.candidates, p, q) * &self.coeffs;
        vq.adjoint() * &vq
    }

    /// `max |(w_hat_l, w_hat_j)_e - delta_lj|` with the closed-form Gram.
    pub fn orthonormality_defect(&self) -> f64 {
        identity_defect(&self.gram())
    }

    /// `max |(w_hat_l, w_hat_j)_e - delta_lj|` with the sampled Gram.
    pub fn sampled_orthonormality_defect(&self) -> f64 {
        identity_defect(&self.sampled_gram(self.a, self.b))
    }
}

fn identity_defect(g: &Mat<c64>) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((g[(i, j)] - target).norm());
        }
    }
    d
}

/// `G0[(j, l)] = (nu_l, nu_j)_e = int_e nu_l conj(nu_j)`.
pub fn trace_gram(cands: &[WaveFunction], a: Point, b: Point) -> Mat<c64> {
    let n = cands.len();
    let mut g = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        for l in 0..=j {
            let v = edge_integral_pair(&cands[l], &cands[j], a, b);
            g[(j, l)] = v;
            g[(l, j)] = v.conj();
        }
    }
    g
}

/// Weighted trace samples `V[(i, r)] = sqrt(w_i) nu_r(x_i)` at Gauss points, so that `V^H V = G0`.
///
/// The rule has enough points to integrate every product `nu_l conj(nu_j)` to
/// rounding accuracy and never fewer points than candidates.
pub fn trace_factor(cands: &[WaveFunction], a: Point, b: Point) -> Mat<c64> {
    let h = a.dist(b);
    let kmax = cands.iter().map(|w| w.scale()).fold(0.0, f64::max);
    let n = 32usize.max(cands.len() + 8).max((2.0 * kmax * h).ceil() as usize + 20);
    let gl = crate::quadrature::GaussLegendre::new(n);
    let pts: Vec<(f64, f64)> = gl.unit_interval().collect();
    Mat::<c64>::from_fn(pts.len(), cands.len(), |i, r| {
        let (t, w) = pts[i];
        cands[r].eval(a.lerp(b, t)) * (w * h).sqrt()
    })
}

/// Orthogonalization and filtering of the traces `cands` on `[a, b]`.
pub fn orthogonalize_filter(
    edge: usize,
    cands: Vec<WaveFunction>,
    a: Point,
    b: Point,
    sigma: f64,
) -> Result<OrthogonalEdgeBasis, EdgeBasisError> {
    if cands.is_empty() {
        return Err(EdgeBasisError::NoCandidates { edge });
    }
    let n = cands.len();
    // Assemble both triangles independently so the Hermitian check is meaningful.
    let mut g = Mat::<c64>::zeros(n, n);
    for j in 0..n {
        for l in 0..n {
            g[(j, l)] = edge_integral_pair(&cands[l], &cands[j], a, b);
        }
    }
    let mut scale: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for j in 0..n {
        for l in 0..n {
            scale = scale.max(g[(j, l)].norm());
            defect = defect.max((g[(j, l)] - g[(l, j)].conj()).norm());
        }
    }
    if defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(EdgeBasisError::NotHermitian { edge, defect });
    }
    // Right singular vectors of the sampled traces are the eigenvectors of
    // G0, but resolved to eps / sqrt(lambda) instead of eps / lambda.
    let v = trace_factor(&cands, a, b);
    let svd = v.thin_svd().map_err(|_| EdgeBasisError::Eigen { edge })?;
    let sv = svd.S().column_vector();
    let mut order: Vec<usize> = (0..sv.nrows()).collect();
    order.sort_by(|&i, &j| sv[i].re.total_cmp(&sv[j].re));
    let spectrum: Vec<f64> = order.iter().map(|&i| sv[i].re * sv[i].re).collect();
    let u = Mat::<c64>::from_fn(n, order.len(), |r, c| svd.V()[(r, order[c])]);
    let keep: Vec<usize> = (0..n).filter(|&i| spectrum[i].abs() > sigma).collect();
    if keep.is_empty() {
        return Err(EdgeBasisError::AllFiltered { edge, sigma });
    }
    // The Gram matrix is positive semidefinite; anything kept is positive up to rounding.
    let coeffs = Mat::<c64>::from_fn(n, keep.len(), |r, c| u[(r, keep[c])] * (1.0 / spectrum[keep[c]].abs().sqrt()));
    let eigenvalues = keep.iter().map(|&i| spectrum[i]).collect();
    Ok(OrthogonalEdgeBasis { edge, a, b, candidates: cands, coeffs, eigenvalues, spectrum })
}

/// Candidate traces of `edge`: the waves of every adjacent element.
pub fn build_candidates(mesh: &PolygonMesh, bases: &[ElementWaveBasis], edge: usize) -> Vec<WaveFunction> {
    mesh.edge(edge).neighbors().iter().flat_map(|&e| bases[e].waves.iter().copied()).collect()
}

/// Edge bases of the whole mesh, computed edge-parallel.
pub fn build_edge_bases(
    mesh: &PolygonMesh,
    bases: &[ElementWaveBasis],
    sigma: f64,
) -> Result<Vec<OrthogonalEdgeBasis>, EdgeBasisError> {
    (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let (a, b) = mesh.edge_endpoints(e);
            orthogonalize_filter(e, build_candidates(mesh, bases, e), a, b, sigma)
        })
        .collect()
}

/// Per-edge diagnostics: `edge,rho,p_hat,min_lambda,max_lambda`.
pub fn write_edge_diagnostics<W: Write>(edges: &[OrthogonalEdgeBasis], mut w: W) -> std::io::Result<()> {
    writeln!(w, "edge,rho,p_hat,min_lambda,max_lambda")?;
    for e in edges {
        let min = e.eigenvalues.first().copied().unwrap_or(f64::NAN);
        let max = e.eigenvalues.last().copied().unwrap_or(f64::NAN);
        writeln!(w, "{},{},{},{:e},{:e}", e.edge, e.rho(), e.dim(), min, max)?;
    }
    Ok(())
}
