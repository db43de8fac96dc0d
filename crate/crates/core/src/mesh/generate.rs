//! Built-in mesh families on `(-1, 1)^2`.
//!
//! All generators produce axis-aligned rectangles; [`from_rectangles`]
//! inserts hanging vertices into the loops of coarser neighbours so that
//! every stored edge is shared exactly.

use std::collections::HashMap;

use super::{MeshError, PolygonMesh};
use crate::geometry::Point;

/// Largest width/height ratio of the cells produced by [`generate_graded_iso`].
pub const MAX_GRADED_ASPECT: f64 = 5.0;

/// Axis-aligned rectangle `[x0, x1, y0, y1]`.
pub type Rect = [f64; 4];

/// Uniform `m x m` Cartesian mesh.
pub fn generate_cartesian(m: usize) -> Result<PolygonMesh, MeshError> {
    if m == 0 {
        return Err(MeshError::Argument("m must be at least 1".into()));
    }
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / m as f64;
    let mut vertices = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            vertices.push(Point::new(coord(i), coord(j)));
        }
    }
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut loops = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            loops.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonMesh::new(vertices, loops)
}

fn check_grading(n: usize, sigma: f64) -> Result<(), MeshError> {
    if n == 0 {
        return Err(MeshError::Argument("graded meshes need n >= 1".into()));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(MeshError::Argument(format!("grading parameter {sigma} outside (0, 1)")));
    }
    Ok(())
}

fn split_x(x0: f64, x1: f64, pieces: usize, y0: f64, y1: f64, out: &mut Vec<Rect>) {
    for i in 0..pieces {
        let a = x0 + (x1 - x0) * i as f64 / pieces as f64;
        let b = x0 + (x1 - x0) * (i + 1) as f64 / pieces as f64;
        out.push([a, b, y0, y1]);
    }
}

/// Isotropic geometric refinement towards the interface.
///
/// `T_1` consists of the slabs `|y| > sigma` and a band `|y| < sigma` split
/// into cells straddling the interface. Each refinement step replaces every
/// band cell of half-height `a` by a top and bottom piece of height
/// `(1 - sigma) a` and a new band of half-height `sigma a`, split in `x`
/// so that no cell is wider than [`MAX_GRADED_ASPECT`] times its height.
/// The band always has at least two cells per parent.
pub fn generate_graded_iso(n: usize, sigma: f64) -> Result<PolygonMesh, MeshError> {
    check_grading(n, sigma)?;
    let mut fixed: Vec<Rect> = vec![[-1.0, 1.0, sigma, 1.0], [-1.0, 1.0, -1.0, -sigma]];
    let pieces = |w: f64, h: f64| (w / (MAX_GRADED_ASPECT * h) - 1e-12).ceil().max(1.0) as usize;
    let mut band = Vec::new();
    split_x(-1.0, 1.0, pieces(2.0, 2.0 * sigma).max(2), -sigma, sigma, &mut band);
    let mut a = sigma;
    for _ in 1..n {
        let inner = sigma * a;
        let mut next = Vec::new();
        for r in &band {
            let w = r[1] - r[0];
            let m = pieces(w, a - inner);
            split_x(r[0], r[1], m, inner, a, &mut fixed);
            split_x(r[0], r[1], m, -a, -inner, &mut fixed);
            split_x(r[0], r[1], pieces(w, 2.0 * inner).max(2), -inner, inner, &mut next);
        }
        band = next;
        a = inner;
    }
    fixed.extend(band);
    from_rectangles(&fixed)
}

/// Anisotropic geometric refinement: `2n + 1` full-width slabs with
/// horizontal lines at `y = ±sigma^j`, `j = 1..=n`. The middle slab is cut
/// by the interface.
pub fn generate_graded_aniso(n: usize, sigma: f64) -> Result<PolygonMesh, MeshError> {
    check_grading(n, sigma)?;
    let mut levels = vec![-1.0, 1.0];
    for j in 1..=n as i32 {
        let s = sigma.powi(j);
        levels.push(s);
        levels.push(-s);
    }
    levels.sort_by(f64::total_cmp);
    let rects: Vec<Rect> = levels.windows(2).map(|w| [-1.0, 1.0, w[0], w[1]]).collect();
    from_rectangles(&rects)
}

/// Vertex pool merging points closer than `tol`.
struct VertexPool {
    points: Vec<Point>,
    bins: HashMap<(i64, i64), Vec<usize>>,
    tol: f64,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        Self { points: Vec::new(), bins: HashMap::new(), tol }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.bins.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.points[id].dist(p) <= self.tol) {
                        return id;
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.bins.entry((kx, ky)).or_default().push(id);
        id
    }
}

/// Builds a mesh from a tiling of `(-1, 1)^2` by axis-aligned rectangles.
///
/// Corners of neighbouring rectangles that fall inside the side of a larger
/// rectangle are inserted into its loop as collinear vertices.
pub fn from_rectangles(rects: &[Rect]) -> Result<PolygonMesh, MeshError> {
    let tol = 1e-11;
    let mut pool = VertexPool::new(tol);
    for r in rects {
        for p in [[r[0], r[2]], [r[1], r[2]], [r[1], r[3]], [r[0], r[3]]] {
            pool.insert(Point::from(p));
        }
    }
    let points = pool.points.clone();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
    let xs: Vec<f64> = order.iter().map(|&i| points[i].x).collect();

    let mut loops = Vec::with_capacity(rects.len());
    for r in rects {
        let lo = xs.partition_point(|&x| x < r[0] - tol);
        let hi = xs.partition_point(|&x| x <= r[1] + tol);
        let mut bottom = Vec::new();
        let mut right = Vec::new();
        let mut top = Vec::new();
        let mut left = Vec::new();
        for &v in &order[lo..hi] {
            let p = points[v];
            if p.y < r[2] - tol || p.y > r[3] + tol {
                continue;
            }
            let on_bottom = (p.y - r[2]).abs() <= tol;
            let on_top = (p.y - r[3]).abs() <= tol;
            let on_left = (p.x - r[0]).abs() <= tol;
            let on_right = (p.x - r[1]).abs() <= tol;
            // each corner goes to the side it starts in counter-clockwise order
            if on_bottom && !on_right {
                bottom.push(v);
            } else if on_right && !on_top {
                right.push(v);
            } else if on_top && !on_left {
                top.push(v);
            } else if on_left && !on_bottom {
                left.push(v);
            }
        }
        bottom.sort_by(|&a, &b| points[a].x.total_cmp(&points[b].x));
        right.sort_by(|&a, &b| points[a].y.total_cmp(&points[b].y));
        top.sort_by(|&a, &b| points[b].x.total_cmp(&points[a].x));
        left.sort_by(|&a, &b| points[b].y.total_cmp(&points[a].y));
        let mut lp = bottom;
        lp.extend(right);
        lp.extend(top);
        lp.extend(left);
        loops.push(lp);
    }
    PolygonMesh::new(points, loops)
}
