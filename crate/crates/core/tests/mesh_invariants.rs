use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use nctvem::geometry::Point;
use nctvem::mesh::{
    generate_cartesian, generate_graded_aniso, generate_graded_iso, load_mesh, save_mesh, EdgeKind, PolygonMesh,
    MAX_GRADED_ASPECT,
};
use proptest::prelude::*;

fn check_common(m: &PolygonMesh) -> Result<(), TestCaseError> {
    let area: f64 = m.elements().iter().map(|e| e.area).sum();
    prop_assert!((area - 4.0).abs() < 1e-12, "area {area}");
    for (id, e) in m.edges().iter().enumerate() {
        let nbs = e.neighbors();
        prop_assert_eq!(nbs.len(), if e.kind == EdgeKind::Boundary { 1 } else { 2 });
        for &el in nbs {
            prop_assert!(m.element(el).edges.contains(&id));
        }
    }
    for (el, e) in m.elements().iter().enumerate() {
        for &ed in &e.edges {
            prop_assert!(m.edge(ed).neighbors().contains(&el));
        }
    }
    Ok(())
}

/// Element ids per layer, as sets of bounding boxes so meshes can be compared.
fn layer_boxes(m: &PolygonMesh, layer: usize) -> BTreeSet<[i64; 4]> {
    m.elements()
        .iter()
        .zip(m.layers())
        .filter(|(_, &l)| l == layer)
        .map(|(e, _)| e.bbox.map(|v| (v * 1e9).round() as i64))
        .collect()
}

/// Only layer 0 is refined: deeper layers shift by one, and the new layers 0 and 1 tile the old layer 0.
fn check_nesting(coarse: &PolygonMesh, fine: &PolygonMesh) -> Result<(), TestCaseError> {
    for l in 2..=coarse.num_layers() {
        prop_assert_eq!(layer_boxes(fine, l), layer_boxes(coarse, l - 1));
    }
    let layer_area = |m: &PolygonMesh, ls: &[usize]| -> f64 {
        m.elements().iter().zip(m.layers()).filter(|(_, l)| ls.contains(l)).map(|(e, _)| e.area).sum()
    };
    prop_assert!((layer_area(fine, &[0, 1]) - layer_area(coarse, &[0])).abs() < 1e-12);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cartesian_invariants(m in 1usize..=16) {
        let mesh = generate_cartesian(m).unwrap();
        check_common(&mesh)?;
        prop_assert_eq!(mesh.num_elements(), m * m);
        prop_assert_eq!(mesh.is_interface_conforming(), m % 2 == 0);
    }

    #[test]
    fn graded_iso_invariants(n in 1usize..=5, sigma in 0.2f64..0.5) {
        let mesh = generate_graded_iso(n, sigma).unwrap();
        check_common(&mesh)?;
        let bound = 2.0 * (1.0 + MAX_GRADED_ASPECT * MAX_GRADED_ASPECT).sqrt();
        for (e, &l) in mesh.elements().iter().zip(mesh.layers()) {
            let r = e.diameter / sigma.powi((n - l) as i32);
            prop_assert!((0.5..=bound).contains(&r), "layer {l} ratio {r}");
            prop_assert!(e.width() <= MAX_GRADED_ASPECT * e.height() * (1.0 + 1e-9));
        }
        let finer = generate_graded_iso(n + 1, sigma).unwrap();
        check_nesting(&mesh, &finer)?;
    }

    #[test]
    fn graded_aniso_invariants(n in 1usize..=6, sigma in 0.2f64..0.5) {
        let mesh = generate_graded_aniso(n, sigma).unwrap();
        check_common(&mesh)?;
        prop_assert_eq!(mesh.num_elements(), 2 * n + 1);
        for (e, &l) in mesh.elements().iter().zip(mesh.layers()) {
            prop_assert!((e.width() - 2.0).abs() < 1e-15);
            let r = e.height() / sigma.powi((n - l) as i32);
            prop_assert!((0.5..=2.0 * 2f64.sqrt()).contains(&r), "layer {l} ratio {r}");
        }
        let finer = generate_graded_aniso(n + 1, sigma).unwrap();
        check_nesting(&mesh, &finer)?;
    }

    #[test]
    fn save_load_round_trip(m in 1usize..=6, n in 1usize..=3) {
        for mesh in [generate_cartesian(m).unwrap(), generate_graded_iso(n, 1.0 / 3.0).unwrap()] {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.mesh");
            save_mesh(&mesh, &path).unwrap();
            let back = load_mesh(&path).unwrap();
            prop_assert_eq!(back.num_elements(), mesh.num_elements());
            prop_assert_eq!(back.num_edges(), mesh.num_edges());
            prop_assert_eq!(back.layers(), mesh.layers());
        }
    }
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let ab = b - a;
    let t = (p - a).dot(ab) / ab.dot(ab);
    (-1e-12..=1.0 + 1e-12).contains(&t) && (a + ab * t).dist(p) < 1e-12
}

/// Layers by brute force: closures intersect iff a vertex of one lies on the boundary of the other.
fn brute_force_layers(m: &PolygonMesh) -> Vec<usize> {
    let polys: Vec<Vec<Point>> = (0..m.num_elements()).map(|e| m.polygon(e)).collect();
    let touches = |p: &[Point], q: &[Point]| {
        p.iter().any(|&v| (0..q.len()).any(|i| on_segment(v, q[i], q[(i + 1) % q.len()])))
    };
    let near = |i: usize, j: usize| touches(&polys[i], &polys[j]) || touches(&polys[j], &polys[i]);
    let on_interface = |p: &[Point]| {
        let lo = p.iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        let hi = p.iter().map(|v| v.y).fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let mut layer: Vec<Option<usize>> = polys.iter().map(|p| on_interface(p).then_some(0)).collect();
    let mut l = 0;
    while layer.iter().any(|v| v.is_none()) {
        let next: Vec<usize> = (0..polys.len())
            .filter(|&i| layer[i].is_none() && (0..polys.len()).any(|j| layer[j] == Some(l) && near(i, j)))
            .collect();
        assert!(!next.is_empty());
        for i in next {
            layer[i] = Some(l + 1);
        }
        l += 1;
    }
    layer.into_iter().map(|v| v.unwrap()).collect()
}

#[test]
fn graded_iso_layers_match_brute_force() {
    let m = generate_graded_iso(2, 1.0 / 3.0).unwrap();
    let layers = brute_force_layers(&m);
    assert_eq!(m.layers(), &layers[..]);
    let counts = (0..3).map(|l| layers.iter().filter(|&&v| v == l).count()).collect::<Vec<_>>();
    assert_eq!(counts, [4, 4, 2]);
    for n in 1..=5 {
        let m = generate_graded_iso(n, 0.4).unwrap();
        assert_eq!(m.layers(), &brute_force_layers(&m)[..]);
    }
}

#[test]
fn cartesian_layers() {
    assert!(generate_cartesian(2).unwrap().layers().iter().all(|&l| l == 0));
    let m = generate_cartesian(4).unwrap();
    for (e, &l) in m.elements().iter().zip(m.layers()) {
        let inner = e.bbox[2].abs() < 1e-12 || e.bbox[3].abs() < 1e-12;
        assert_eq!(l, if inner { 0 } else { 1 });
    }
}

fn mesh_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../meshes")
}

/// Reads the raw file and checks orientation, convexity and pairing of edges without the crate's builder.
fn independent_check(text: &str) -> (usize, usize) {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ncvem-mesh 1"));
    let nv: usize = lines.next().unwrap().strip_prefix("vertices ").unwrap().parse().unwrap();
    let verts: Vec<(f64, f64)> = (0..nv)
        .map(|_| {
            let v: Vec<f64> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    let ne: usize = lines.next().unwrap().strip_prefix("elements ").unwrap().parse().unwrap();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut area = 0.0;
    for _ in 0..ne {
        let ids: Vec<usize> = lines.next().unwrap().split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect();
        let n = ids.len();
        let mut a2 = 0.0;
        for i in 0..n {
            let (p, q, r) = (verts[ids[i]], verts[ids[(i + 1) % n]], verts[ids[(i + 2) % n]]);
            a2 += p.0 * q.1 - q.0 * p.1;
            let turn = (q.0 - p.0) * (r.1 - q.1) - (q.1 - p.1) * (r.0 - q.0);
            assert!(turn > -1e-12, "reflex corner");
            *directed.entry((ids[i], ids[(i + 1) % n])).or_default() += 1;
        }
        assert!(a2 > 0.0, "clockwise loop");
        area += a2 / 2.0;
    }
    assert!((area - 4.0).abs() < 1e-10);
    let mut interface = 0;
    for (&(a, b), &c) in &directed {
        assert_eq!(c, 1, "edge traversed twice in one direction");
        let (pa, pb) = (verts[a], verts[b]);
        let on_boundary = |f: fn((f64, f64)) -> f64, s: f64| (f(pa) - s).abs() < 1e-12 && (f(pb) - s).abs() < 1e-12;
        let outer = on_boundary(|p| p.0, 1.0) || on_boundary(|p| p.0, -1.0) || on_boundary(|p| p.1, 1.0) || on_boundary(|p| p.1, -1.0);
        assert!(outer || directed.contains_key(&(b, a)), "dangling edge");
        if pa.1.abs() < 1e-12 && pb.1.abs() < 1e-12 && a < b {
            interface += 1;
        }
    }
    (ne, interface)
}

#[test]
fn voronoi_files_are_valid() {
    for total in [16, 64, 128, 256] {
        let path = mesh_dir().join(format!("voronoi_{total}.mesh"));
        let text = std::fs::read_to_string(&path).unwrap();
        let (ne, interface) = independent_check(&text);
        let m = load_mesh(&path).unwrap();
        assert_eq!((m.num_elements(), ne), (total, total));
        assert!(m.is_interface_conforming());
        let tagged = m.edges().iter().filter(|e| e.kind == EdgeKind::Interface).count();
        assert_eq!(tagged, interface);
    }
}
