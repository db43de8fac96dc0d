//! Line-oriented text format.
//!
//! ```text
//! ncvem-mesh 1
//! vertices N
//! x y            (N lines)
//! elements M
//! k i1 ... ik    (M lines, 0-based counter-clockwise loops)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Subdomain tags and
//! layers are recomputed on load.

use std::io::{BufRead, Write};
use std::path::Path;

use super::{MeshError, PolygonMesh};
use crate::geometry::Point;

const HEADER: &str = "ncvem-mesh 1";

pub fn read_mesh<R: BufRead>(reader: R) -> Result<PolygonMesh, MeshError> {
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MeshError::Io(e.to_string()))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            lines.push((i + 1, t.to_string()));
        }
    }
    let mut it = lines.into_iter();
    let mut next = |what: &str| it.next().ok_or(MeshError::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") });

    let (no, header) = next("header")?;
    if header != HEADER {
        return Err(MeshError::Parse { line: no, msg: format!("expected `{HEADER}`") });
    }
    let nv = count_line(next("vertex count")?, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = next("vertex")?;
        let nums = parse_fields::<f64>(no, &line)?;
        if nums.len() != 2 {
            return Err(MeshError::Parse { line: no, msg: "vertex line needs two coordinates".into() });
        }
        vertices.push(Point::new(nums[0], nums[1]));
    }
    let ne = count_line(next("element count")?, "elements")?;
    let mut loops = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (no, line) = next("element")?;
        let nums = parse_fields::<usize>(no, &line)?;
        if nums.is_empty() || nums[0] + 1 != nums.len() {
            return Err(MeshError::Parse { line: no, msg: "element line must be `k i1 ... ik`".into() });
        }
        loops.push(nums[1..].to_vec());
    }
    if let Some((no, _)) = it.next() {
        return Err(MeshError::Parse { line: no, msg: "trailing content".into() });
    }
    PolygonMesh::new(vertices, loops)
}

fn count_line((no, line): (usize, String), keyword: &str) -> Result<usize, MeshError> {
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next().map(str::parse::<usize>), parts.next()) {
        (Some(k), Some(Ok(n)), None) if k == keyword => Ok(n),
        _ => Err(MeshError::Parse { line: no, msg: format!("expected `{keyword} <count>`") }),
    }
}

fn parse_fields<T: std::str::FromStr>(no: usize, line: &str) -> Result<Vec<T>, MeshError> {
    line.split_whitespace()
        .map(|s| s.parse::<T>().map_err(|_| MeshError::Parse { line: no, msg: format!("cannot parse `{s}`") }))
        .collect()
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<PolygonMesh, MeshError> {
    let file = std::fs::File::open(path.as_ref()).map_err(|e| MeshError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_mesh(std::io::BufReader::new(file))
}

pub fn write_mesh<W: Write>(mesh: &PolygonMesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "vertices {}", mesh.vertices().len())?;
    for v in mesh.vertices() {
        writeln!(w, "{} {}", v.x, v.y)?;
    }
    writeln!(w, "elements {}", mesh.num_elements())?;
    for el in mesh.elements() {
        write!(w, "{}", el.vertices.len())?;
        for v in &el.vertices {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &PolygonMesh, path: impl AsRef<Path>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_mesh(mesh, &mut w)?;
    w.flush()
}
