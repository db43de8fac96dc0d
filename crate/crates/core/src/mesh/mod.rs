//! Polygonal meshes of the square `(-1, 1)^2` split by the interface `y = 0`.
//!
//! A [`PolygonMesh`] is immutable once built. Construction validates the
//! topology (counter-clockwise simple loops, exact edge sharing, star-shaped
//! elements) and derives the edge list, the subdomain tags and the layer
//! indices with respect to the interface.

mod generate;
mod io;

pub use generate::{from_rectangles, generate_cartesian, generate_graded_aniso, generate_graded_iso, Rect, MAX_GRADED_ASPECT};
pub use io::{load_mesh, read_mesh, save_mesh, write_mesh};

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::geometry::{self, Point};

/// Geometric tolerance for classification and validation.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("element {element} has fewer than three vertices")]
    Degenerate { element: usize },
    #[error("element {element} references missing vertex {vertex}")]
    BadVertex { element: usize, vertex: usize },
    #[error("element {element} is not counter-clockwise (signed area {area:e})")]
    Orientation { element: usize, area: f64 },
    #[error("element {element} is not a simple polygon")]
    SelfIntersecting { element: usize },
    #[error("element {element} is not star-shaped with respect to its barycenter")]
    NotStarShaped { element: usize },
    #[error("edge ({a}, {b}) is traversed in the same direction by elements {first} and {second}")]
    InconsistentEdge { a: usize, b: usize, first: usize, second: usize },
    #[error("edge ({a}, {b}) is shared by more than two elements")]
    NonManifold { a: usize, b: usize },
    #[error("dangling edge ({a}, {b}) of element {element}: one-sided but not on the domain boundary")]
    DanglingEdge { a: usize, b: usize, element: usize },
    #[error("vertex {vertex} lies outside the domain")]
    OutsideDomain { vertex: usize },
    #[error("elements cover area {area}, expected 4")]
    Coverage { area: f64 },
    #[error("mesh is not connected")]
    Disconnected,
    #[error("invalid generator argument: {0}")]
    Argument(String),
}

/// Position of an element relative to the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subdomain {
    /// Strictly below the interface (`y < 0`).
    Omega1,
    /// Strictly above the interface.
    Omega2,
    /// The element interior intersects the interface.
    Cut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    /// Interior edge lying on the interface.
    Interface,
    /// Edge on the boundary of the square.
    Boundary,
}

#[derive(Debug, Clone)]
pub struct Element {
    /// Counter-clockwise vertex loop.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    pub barycenter: Point,
    pub diameter: f64,
    pub area: f64,
    pub subdomain: Subdomain,
    /// `[xmin, xmax, ymin, ymax]`.
    pub bbox: [f64; 4],
}

impl Element {
    /// Extent parallel to the interface.
    pub fn width(&self) -> f64 {
        self.bbox[1] - self.bbox[0]
    }

    /// Extent normal to the interface.
    pub fn height(&self) -> f64 {
        self.bbox[3] - self.bbox[2]
    }
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, ordered counter-clockwise with respect to `elements[0]`.
    pub vertices: [usize; 2],
    pub elements: [usize; 2],
    /// Whether `elements[1]` exists.
    pub two_sided: bool,
    pub length: f64,
    pub tangent: Point,
    /// Unit normal pointing out of `elements[0]`.
    pub normal: Point,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn neighbors(&self) -> &[usize] {
        if self.two_sided {
            &self.elements
        } else {
            &self.elements[..1]
        }
    }

    /// Sign of the outward normal of `element` relative to [`Edge::normal`].
    pub fn orientation(&self, element: usize) -> f64 {
        if self.elements[0] == element {
            1.0
        } else {
            debug_assert!(self.two_sided && self.elements[1] == element);
            -1.0
        }
    }

    pub fn outward_normal(&self, element: usize) -> Point {
        self.normal * self.orientation(element)
    }
}

#[derive(Debug, Clone)]
pub struct PolygonMesh {
    vertices: Vec<Point>,
    elements: Vec<Element>,
    edges: Vec<Edge>,
    layers: Vec<usize>,
}

impl PolygonMesh {
    /// Builds and validates a mesh from vertex coordinates and counter-clockwise loops.
    pub fn new(vertices: Vec<Point>, loops: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        for (i, v) in vertices.iter().enumerate() {
            if v.x.abs() > 1.0 + GEOM_TOL || v.y.abs() > 1.0 + GEOM_TOL || !v.x.is_finite() || !v.y.is_finite() {
                return Err(MeshError::OutsideDomain { vertex: i });
            }
        }
        let mut elements = Vec::with_capacity(loops.len());
        for (id, lp) in loops.into_iter().enumerate() {
            elements.push(build_element(id, lp, &vertices)?);
        }
        let edges = build_edges(&mut elements, &vertices)?;
        let total: f64 = elements.iter().map(|e| e.area).sum();
        if (total - 4.0).abs() > 1e-10 {
            return Err(MeshError::Coverage { area: total });
        }
        let mut mesh = Self { vertices, elements, edges, layers: Vec::new() };
        if !mesh.is_connected() {
            return Err(MeshError::Disconnected);
        }
        mesh.layers = compute_layers(&mesh);
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Layer index of every element (0 = touches the interface).
    pub fn layers(&self) -> &[usize] {
        &self.layers
    }

    /// Number of layers `n + 1`.
    pub fn num_layers(&self) -> usize {
        self.layers.iter().max().map_or(0, |m| m + 1)
    }

    /// Maximal element diameter.
    pub fn h(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    pub fn polygon(&self, element: usize) -> Vec<Point> {
        self.elements[element].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn edge_endpoints(&self, edge: usize) -> (Point, Point) {
        let [a, b] = self.edges[edge].vertices;
        (self.vertices[a], self.vertices[b])
    }

    /// Endpoints of `edge` in counter-clockwise order with respect to `element`.
    pub fn edge_endpoints_for(&self, edge: usize, element: usize) -> (Point, Point) {
        let (a, b) = self.edge_endpoints(edge);
        if self.edges[edge].elements[0] == element {
            (a, b)
        } else {
            (b, a)
        }
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().enumerate().filter(|(_, e)| e.kind == EdgeKind::Boundary).map(|(i, _)| i)
    }

    pub fn count_subdomain(&self, tag: Subdomain) -> usize {
        self.elements.iter().filter(|e| e.subdomain == tag).count()
    }

    /// Whether no element is cut by the interface.
    pub fn is_interface_conforming(&self) -> bool {
        self.count_subdomain(Subdomain::Cut) == 0
    }

    fn is_connected(&self) -> bool {
        if self.elements.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.elements.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(e) = queue.pop_front() {
            for &ed in &self.elements[e].edges {
                for &nb in self.edges[ed].neighbors() {
                    if !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        seen.iter().all(|&s| s)
    }
}

fn build_element(id: usize, lp: Vec<usize>, vertices: &[Point]) -> Result<Element, MeshError> {
    if lp.len() < 3 {
        return Err(MeshError::Degenerate { element: id });
    }
    if let Some(&v) = lp.iter().find(|&&v| v >= vertices.len()) {
        return Err(MeshError::BadVertex { element: id, vertex: v });
    }
    let poly: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
    let area = geometry::signed_area(&poly);
    if area <= 0.0 {
        return Err(MeshError::Orientation { element: id, area });
    }
    let n = poly.len();
    for i in 0..n {
        if lp[i] == lp[(i + 1) % n] {
            return Err(MeshError::SelfIntersecting { element: id });
        }
        // Non-adjacent edge pairs must not touch.
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let tol = GEOM_TOL * (1.0 + poly[i].norm());
            if geometry::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], tol) {
                return Err(MeshError::SelfIntersecting { element: id });
            }
        }
    }
    let barycenter = geometry::centroid(&poly);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if (b - a).cross(barycenter - a) <= GEOM_TOL * (b - a).norm() {
            return Err(MeshError::NotStarShaped { element: id });
        }
    }
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &poly {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let subdomain = if ymax <= GEOM_TOL {
        Subdomain::Omega1
    } else if ymin >= -GEOM_TOL {
        Subdomain::Omega2
    } else {
        Subdomain::Cut
    };
    Ok(Element {
        vertices: lp,
        edges: Vec::new(),
        barycenter,
        diameter: geometry::diameter(&poly),
        area,
        subdomain,
        bbox: [xmin, xmax, ymin, ymax],
    })
}

fn on_domain_boundary(a: Point, b: Point) -> bool {
    let side = |f: fn(Point) -> f64, v: f64| (f(a) - v).abs() < GEOM_TOL && (f(b) - v).abs() < GEOM_TOL;
    side(|p| p.x, -1.0) || side(|p| p.x, 1.0) || side(|p| p.y, -1.0) || side(|p| p.y, 1.0)
}

fn build_edges(elements: &mut [Element], vertices: &[Point]) -> Result<Vec<Edge>, MeshError> {
    let mut edges: Vec<Edge> = Vec::new();
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    for (eid, el) in elements.iter_mut().enumerate() {
        let n = el.vertices.len();
        let mut ids = Vec::with_capacity(n);
        for i in 0..n {
            let a = el.vertices[i];
            let b = el.vertices[(i + 1) % n];
            let key = (a.min(b), a.max(b));
            match lookup.get(&key) {
                Some(&id) => {
                    let edge = &mut edges[id];
                    if edge.two_sided {
                        return Err(MeshError::NonManifold { a: key.0, b: key.1 });
                    }
                    if edge.vertices == [a, b] {
                        return Err(MeshError::InconsistentEdge { a, b, first: edge.elements[0], second: eid });
                    }
                    edge.elements[1] = eid;
                    edge.two_sided = true;
                    ids.push(id);
                }
                None => {
                    let pa = vertices[a];
                    let pb = vertices[b];
                    let length = pa.dist(pb);
                    let tangent = (pb - pa) * (1.0 / length);
                    lookup.insert(key, edges.len());
                    ids.push(edges.len());
                    edges.push(Edge {
                        vertices: [a, b],
                        elements: [eid, usize::MAX],
                        two_sided: false,
                        length,
                        tangent,
                        normal: tangent.rot_cw(),
                        kind: EdgeKind::Boundary,
                    });
                }
            }
        }
        el.edges = ids;
    }
    for edge in &mut edges {
        let (a, b) = (vertices[edge.vertices[0]], vertices[edge.vertices[1]]);
        if edge.two_sided {
            edge.kind = if a.y.abs() < GEOM_TOL && b.y.abs() < GEOM_TOL {
                EdgeKind::Interface
            } else {
                EdgeKind::Interior
            };
        } else if !on_domain_boundary(a, b) {
            return Err(MeshError::DanglingEdge { a: edge.vertices[0], b: edge.vertices[1], element: edge.elements[0] });
        }
    }
    Ok(edges)
}

/// Layer index of every element: layer 0 touches the interface, layer `l`
/// touches layer `l - 1` (sharing at least a vertex) and no earlier layer.
pub fn compute_layers(mesh: &PolygonMesh) -> Vec<usize> {
    let nv = mesh.vertices.len();
    let mut vertex_elements: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (eid, el) in mesh.elements.iter().enumerate() {
        for &v in &el.vertices {
            vertex_elements[v].push(eid);
        }
    }
    let mut layer = vec![usize::MAX; mesh.elements.len()];
    let mut frontier = Vec::new();
    for (eid, el) in mesh.elements.iter().enumerate() {
        if el.bbox[2] <= GEOM_TOL && el.bbox[3] >= -GEOM_TOL {
            layer[eid] = 0;
            frontier.push(eid);
        }
    }
    let mut current = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &eid in &frontier {
            for &v in &mesh.elements[eid].vertices {
                for &nb in &vertex_elements[v] {
                    if layer[nb] == usize::MAX {
                        layer[nb] = current + 1;
                        next.push(nb);
                    }
                }
            }
        }
        next.sort_unstable();
        frontier = next;
        current += 1;
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_quads() -> (Vec<Point>, Vec<Vec<usize>>) {
        // 2x2 squares on (-1,1)^2
        let mut v = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                v.push(Point::new(-1.0 + i as f64, -1.0 + j as f64));
            }
        }
        let q = |i: usize, j: usize| vec![j * 3 + i, j * 3 + i + 1, (j + 1) * 3 + i + 1, (j + 1) * 3 + i];
        (v, vec![q(0, 0), q(1, 0), q(0, 1), q(1, 1)])
    }

    #[test]
    fn two_by_two_topology() {
        let (v, l) = unit_quads();
        let m = PolygonMesh::new(v, l).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.num_edges(), 12);
        assert_eq!(m.edges().iter().filter(|e| e.kind == EdgeKind::Interface).count(), 2);
        assert_eq!(m.boundary_edges().count(), 8);
        assert!(m.layers().iter().all(|&l| l == 0));
        assert_eq!(m.element(0).subdomain, Subdomain::Omega1);
        assert_eq!(m.element(3).subdomain, Subdomain::Omega2);
    }

    #[test]
    fn clockwise_loop_is_named() {
        let (v, mut l) = unit_quads();
        l[2].reverse();
        assert!(matches!(PolygonMesh::new(v, l), Err(MeshError::Orientation { element: 2, .. })));
    }

    #[test]
    fn hanging_node_without_split_is_dangling() {
        // left half is one tall element, right half two squares: the long edge
        // x = 0 is never matched exactly from the right.
        let v = vec![
            Point::new(-1.0, -1.0),
            Point::new(0.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(-1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let bad = vec![vec![0, 1, 6, 5], vec![1, 2, 4, 3], vec![3, 4, 7, 6]];
        assert!(matches!(PolygonMesh::new(v.clone(), bad), Err(MeshError::DanglingEdge { .. })));
        // splitting the long edge at the hanging vertex fixes it
        let good = vec![vec![0, 1, 3, 6, 5], vec![1, 2, 4, 3], vec![3, 4, 7, 6]];
        let m = PolygonMesh::new(v, good).unwrap();
        assert_eq!(m.element(0).edges.len(), 5);
        assert_eq!(m.element(0).subdomain, Subdomain::Cut);
    }

    #[test]
    fn non_star_shaped_rejected() {
        // An L-shaped hexagon whose centroid sits in the notch is not star-shaped around it.
        let v = vec![
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(1.0, -0.9),
            Point::new(-0.9, -0.9),
            Point::new(-0.9, 1.0),
            Point::new(-1.0, 1.0),
            Point::new(1.0, 1.0),
        ];
        let l = vec![vec![0, 1, 2, 3, 4, 5], vec![3, 2, 6, 4]];
        assert!(matches!(PolygonMesh::new(v, l), Err(MeshError::NotStarShaped { element: 0 })));
    }

    #[test]
    fn coverage_is_checked() {
        let (v, mut l) = unit_quads();
        l.pop();
        assert!(PolygonMesh::new(v, l).is_err());
    }

    #[test]
    fn outward_normals_flip_between_neighbors() {
        let (v, l) = unit_quads();
        let m = PolygonMesh::new(v, l).unwrap();
        for e in m.edges().iter().filter(|e| e.two_sided) {
            let n0 = e.outward_normal(e.elements[0]);
            let n1 = e.outward_normal(e.elements[1]);
            assert_eq!(n0, -n1);
            let c0 = m.element(e.elements[0]).barycenter;
            let (a, _) = (m.vertices()[e.vertices[0]], ());
            assert!((a - c0).dot(n0) > 0.0);
        }
    }
}
