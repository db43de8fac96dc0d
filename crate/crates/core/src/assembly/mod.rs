//! Global DOF numbering, sparse assembly and direct solve.

mod boundary;
mod local;

pub use boundary::{rhs_points, rhs_vector, robin_matrix, split_at_interface, MIN_RHS_POINTS};
pub use local::{condition_number, edge_moments, g_matrix, local_matrices, LocalElementMatrices, LocalError, Side};

use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{ImpedanceData, InterfaceProblem};
use crate::edgebasis::{build_edge_bases, EdgeBasisError, OrthogonalEdgeBasis, DEFAULT_SIGMA};
use crate::mesh::{EdgeKind, PolygonMesh, Subdomain};
use crate::wavespace::{ElementWaveBasis, EvanescentParams};

const I: c64 = c64::new(0.0, 1.0);

/// Default relative cut-off of the reduced bulk basis.
pub const DEFAULT_BULK_FILTER: f64 = 1e-8;

/// Wavenumber used for the basis of elements cut by the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutWavenumber {
    #[default]
    Average,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Eigenvalue cut-off of the edge orthogonalization.
    pub sigma_filter: f64,
    pub cut_wavenumber: CutWavenumber,
    /// Global rotation (radians) of the plane-wave directions.
    pub rotation: f64,
    /// Relative singular-value cut-off of the reduced bulk basis.
    pub bulk_filter: f64,
    /// Largest accepted condition number of an element `G`.
    pub cond_limit: f64,
    /// Largest accepted relative residual of the global solve.
    pub residual_limit: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            sigma_filter: DEFAULT_SIGMA,
            cut_wavenumber: CutWavenumber::Average,
            rotation: 0.0,
            bulk_filter: DEFAULT_BULK_FILTER,
            cond_limit: 1e14,
            residual_limit: 1e-8,
        }
    }
}

/// Effective degrees of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementDegrees {
    /// `2q + 1` plane waves (none for `q = 0`).
    pub q: usize,
    /// `2qt` evanescent waves, used only above the interface.
    pub qt: usize,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    EdgeBasis(#[from] EdgeBasisError),
    #[error("element {element}: {source}")]
    Local { element: usize, source: LocalError },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("relative residual {residual:e} exceeds {limit:e}")]
    Residual { residual: f64, limit: f64 },
}

/// Basis wavenumber `k_E` of an element.
pub fn element_wavenumber(tag: Subdomain, problem: &InterfaceProblem, policy: CutWavenumber) -> f64 {
    match tag {
        Subdomain::Omega1 => problem.k1(),
        Subdomain::Omega2 => problem.k2(),
        Subdomain::Cut => match policy {
            CutWavenumber::Average => 0.5 * (problem.k1() + problem.k2()),
            CutWavenumber::Max => problem.k1().max(problem.k2()),
        },
    }
}

/// Bulk wave bases of all elements. Evanescent waves go only to elements strictly above the interface.
pub fn element_bases(
    mesh: &PolygonMesh,
    problem: &InterfaceProblem,
    degrees: &[ElementDegrees],
    opts: &SolverOptions,
) -> Result<Vec<ElementWaveBasis>, SolveError> {
    if degrees.len() != mesh.num_elements() {
        return Err(SolveError::Input(format!("{} degree entries for {} elements", degrees.len(), mesh.num_elements())));
    }
    let ev = EvanescentParams { k: problem.k, n1: problem.n1, n2: problem.n2 };
    let mut out = Vec::with_capacity(degrees.len());
    for (id, (el, deg)) in mesh.elements().iter().zip(degrees).enumerate() {
        let k = element_wavenumber(el.subdomain, problem, opts.cut_wavenumber);
        let evanescent = (el.subdomain == Subdomain::Omega2 && deg.qt > 0).then_some(ev);
        if evanescent.is_some() && problem.n1 <= problem.n2 {
            return Err(SolveError::Input("evanescent waves need n1 > n2".into()));
        }
        let basis = ElementWaveBasis::new(id, el.barycenter, k, deg.q, deg.qt, evanescent, opts.rotation);
        if basis.is_empty() {
            return Err(SolveError::Input(format!("element {id} has no bulk waves")));
        }
        out.push(basis);
    }
    Ok(out)
}

/// First global DOF of each edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub offsets: Vec<usize>,
    pub dims: Vec<usize>,
}

impl DofMap {
    pub fn new(edges: &[OrthogonalEdgeBasis]) -> Self {
        let dims: Vec<usize> = edges.iter().map(|e| e.dim()).collect();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut n = 0;
        for &d in &dims {
            offsets.push(n);
            n += d;
        }
        Self { offsets, dims }
    }

    pub fn len(&self) -> usize {
        self.offsets.last().map_or(0, |o| o + self.dims[self.dims.len() - 1])
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global indices of the local DOFs of an element, in side order.
    pub fn element_dofs(&self, mesh: &PolygonMesh, element: usize) -> Vec<usize> {
        mesh.element(element).edges.iter().flat_map(|&e| self.offsets[e]..self.offsets[e] + self.dims[e]).collect()
    }

    /// `edge,local,global` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "edge,local,global")?;
        for (e, (&o, &d)) in self.offsets.iter().zip(&self.dims).enumerate() {
            for l in 0..d {
                writeln!(w, "{e},{l},{}", o + l)?;
            }
        }
        Ok(())
    }
}

/// Local matrices of every element, computed element-parallel.
pub fn assemble_locals(
    mesh: &PolygonMesh,
    bases: &[ElementWaveBasis],
    edges: &[OrthogonalEdgeBasis],
    opts: &SolverOptions,
) -> Result<Vec<LocalElementMatrices>, SolveError> {
    (0..mesh.num_elements())
        .into_par_iter()
        .map(|id| {
            let el = mesh.element(id);
            let sides: Vec<Side<'_>> = el
                .edges
                .iter()
                .map(|&e| {
                    let (a, b) = mesh.edge_endpoints(e);
                    Side { a, b, normal: mesh.edge(e).outward_normal(id), basis: &edges[e] }
                })
                .collect();
            local_matrices(&bases[id].waves, bases[id].k, &sides, opts.cond_limit, opts.bulk_filter).map_err(|source| SolveError::Local { element: id, source })
        })
        .collect()
}

/// Sparse global matrix in coordinate form plus right-hand side.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, c64)>,
    pub rhs: Vec<c64>,
}

impl GlobalSystem {
    pub fn matvec(&self, x: &[c64]) -> Vec<c64> {
        let mut y = vec![c64::new(0.0, 0.0); self.n];
        for &(i, j, v) in &self.triplets {
            y[i] += v * x[j];
        }
        y
    }

    /// `i j re im` lines, duplicates summed.
    pub fn write_matrix<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut entries = self.triplets.clone();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, c64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        writeln!(w, "% {} {} {}", self.n, self.n, merged.len())?;
        for (i, j, v) in merged {
            writeln!(w, "{i} {j} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }

    /// `i re im` lines.
    pub fn write_rhs<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, v) in self.rhs.iter().enumerate() {
            writeln!(w, "{i} {:e} {:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

/// Scatters element matrices and impedance terms. Sequential, so the
/// triplet order does not depend on the thread pool.
pub fn assemble_global(
    mesh: &PolygonMesh,
    locals: &[LocalElementMatrices],
    edges: &[OrthogonalEdgeBasis],
    dofs: &DofMap,
    data: &dyn ImpedanceData,
) -> GlobalSystem {
    let n = dofs.len();
    let mut triplets = Vec::new();
    for (id, loc) in locals.iter().enumerate() {
        let map = dofs.element_dofs(mesh, id);
        for (c, &gc) in map.iter().enumerate() {
            for (r, &gr) in map.iter().enumerate() {
                triplets.push((gr, gc, loc.a[(r, c)]));
            }
        }
    }
    let boundary: Vec<usize> = mesh.boundary_edges().collect();
    let terms: Vec<(Mat<c64>, Vec<c64>)> = boundary
        .par_iter()
        .map(|&e| {
            let basis = &edges[e];
            let edge = mesh.edge(e);
            let k = basis.candidates.iter().map(|w| w.scale()).fold(0.0, f64::max);
            let f = rhs_vector(basis, edge.normal, data, rhs_points(k, basis.length()));
            (robin_matrix(basis, data), f)
        })
        .collect();
    let mut rhs = vec![c64::new(0.0, 0.0); n];
    for (&e, (r, f)) in boundary.iter().zip(terms) {
        debug_assert_eq!(mesh.edge(e).kind, EdgeKind::Boundary);
        let o = dofs.offsets[e];
        for l in 0..dofs.dims[e] {
            for m in 0..dofs.dims[e] {
                triplets.push((o + m, o + l, I * r[(m, l)]));
            }
            rhs[o + l] += f[l];
        }
    }
    GlobalSystem { n, triplets, rhs }
}

/// Steps of iterative refinement with the LU factors.
const REFINEMENT_STEPS: usize = 3;

/// Sparse LU solve with a few steps of iterative refinement; returns the
/// solution and the relative residual `|Mx - f| / |f|`.
pub fn solve_system(sys: &GlobalSystem) -> Result<(Vec<c64>, f64), SolveError> {
    let trip: Vec<Triplet<usize, usize, c64>> = sys.triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
    let m = SparseColMat::<usize, c64>::try_new_from_triplets(sys.n, sys.n, &trip)
        .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let lu = m.sp_lu().map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
    let den: f64 = sys.rhs.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let residual_of = |x: &[c64]| -> (Vec<c64>, f64) {
        let r: Vec<c64> = sys.rhs.iter().zip(sys.matvec(x)).map(|(f, y)| f - y).collect();
        let num = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let rel = if den > 0.0 { num / den } else { num };
        (r, rel)
    };
    let solve = |b: &[c64]| -> Vec<c64> {
        let x = lu.solve(&Mat::<c64>::from_fn(sys.n, 1, |i, _| b[i]));
        (0..sys.n).map(|i| x[(i, 0)]).collect()
    };
    let mut x = solve(&sys.rhs);
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(SolveError::Factorization("non-finite solution".into()));
    }
    let (mut r, mut residual) = residual_of(&x);
    for _ in 0..REFINEMENT_STEPS {
        if residual <= 1e-14 {
            break;
        }
        let dx = solve(&r);
        let cand: Vec<c64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (r_new, res_new) = residual_of(&cand);
        if !(res_new < residual) {
            break;
        }
        x = cand;
        r = r_new;
        residual = res_new;
    }
    Ok((x, residual))
}

/// Everything produced by one discretization and solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub bases: Vec<ElementWaveBasis>,
    pub edges: Vec<OrthogonalEdgeBasis>,
    pub locals: Vec<LocalElementMatrices>,
    pub dofs: DofMap,
    /// Global DOF vector.
    pub x: Vec<c64>,
    pub residual: f64,
}

impl Solution {
    /// Sum of candidate trace counts over all edges (DOFs before filtering).
    pub fn dofs_raw(&self) -> usize {
        self.edges.iter().map(|e| e.rho()).sum()
    }

    pub fn dofs_filtered(&self) -> usize {
        self.dofs.len()
    }

    /// Coefficients of `Pi u_h` on `element` with respect to its bulk waves.
    pub fn projected_coefficients(&self, mesh: &PolygonMesh, element: usize) -> Vec<c64> {
        let map = self.dofs.element_dofs(mesh, element);
        let ps = &self.locals[element].pi_star;
        (0..ps.nrows()).map(|j| map.iter().enumerate().map(|(c, &g)| ps[(j, c)] * self.x[g]).sum()).collect()
    }
}

/// Builds bases, assembles and solves with impedance data `data`.
pub fn solve_with(
    mesh: &PolygonMesh,
    problem: &InterfaceProblem,
    data: &dyn ImpedanceData,
    degrees: &[ElementDegrees],
    opts: &SolverOptions,
) -> Result<(Solution, GlobalSystem), SolveError> {
    let bases = element_bases(mesh, problem, degrees, opts)?;
    let edges = build_edge_bases(mesh, &bases, opts.sigma_filter)?;
    let dofs = DofMap::new(&edges);
    let locals = assemble_locals(mesh, &bases, &edges, opts)?;
    let sys = assemble_global(mesh, &locals, &edges, &dofs, data);
    let (x, residual) = solve_system(&sys)?;
    if !(residual <= opts.residual_limit) {
        return Err(SolveError::Residual { residual, limit: opts.residual_limit });
    }
    Ok((Solution { bases, edges, locals, dofs, x, residual }, sys))
}

/// [`solve_with`] for the plane-wave interface problem itself.
pub fn solve(
    mesh: &PolygonMesh,
    problem: &InterfaceProblem,
    degrees: &[ElementDegrees],
    opts: &SolverOptions,
) -> Result<Solution, SolveError> {
    solve_with(mesh, problem, problem, degrees, opts).map(|(s, _)| s)
}
