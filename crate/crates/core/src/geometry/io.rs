//! Plain triangle-list text format.
//!
//! ```text
//! # surface: sphere(radius=1)
//! # level: 2
//! v x y z
//! f i j k        (1-based vertex indices)
//! ```

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::mesh::{Point, SurfaceMesh};
use crate::error::{Error, Result};

pub fn mesh_to_text(mesh: &SurfaceMesh) -> String {
    let mut out = String::new();
    match mesh.spec() {
        Some(spec) => writeln!(out, "# surface: {spec}").unwrap(),
        None => writeln!(out, "# surface: unknown").unwrap(),
    }
    if let Some(level) = mesh.level() {
        writeln!(out, "# level: {level}").unwrap();
    }
    writeln!(out, "# vertices: {} triangles: {}", mesh.vertices().len(), mesh.len()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "v {:.17e} {:.17e} {:.17e}", v.x, v.y, v.z).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn write_mesh(mesh: &SurfaceMesh, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(mesh_to_text(mesh).as_bytes())?;
    file.flush()?;
    Ok(())
}

/// Parses the text format; the header comments are ignored, so the result
/// carries no surface provenance.
pub fn mesh_from_text(text: &str) -> Result<SurfaceMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        let mut cols = line.split_whitespace();
        let tag = cols.next().unwrap_or("");
        let rest: Vec<&str> = cols.collect();
        if rest.len() != 3 {
            return Err(err(format!("expected 3 values after `{tag}`")));
        }
        match tag {
            "v" => {
                let c = rest
                    .iter()
                    .map(|s| s.parse::<f64>().map_err(|e| err(e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                vertices.push(Point::new(c[0], c[1], c[2]));
            }
            "f" => {
                let mut t = [0usize; 3];
                for (k, s) in rest.iter().enumerate() {
                    let idx: usize = s.parse().map_err(|e: std::num::ParseIntError| err(e.to_string()))?;
                    if idx == 0 {
                        return Err(err("vertex indices are 1-based".into()));
                    }
                    t[k] = idx - 1;
                }
                triangles.push(t);
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    SurfaceMesh::from_parts(vertices, triangles)
}

pub fn read_mesh(path: &Path) -> Result<SurfaceMesh> {
    mesh_from_text(&std::fs::read_to_string(path)?)
}
