//! Minimal ASCII PLY reader/writer for labeled point clouds.
//!
//! Written files declare `element vertex N` with double-precision `x y z`
//! properties and, when labels are present, a `uchar label` property.
//! Coordinates are printed with the shortest representation that parses back
//! to the identical double, so a write/read round trip is bit-exact.
//!
//! The reader accepts float or double coordinate properties, an optional
//! label property, and arbitrary comment lines. Binary PLY is out of scope.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::geom::{PartLabel, PointCloud, Vec3};

#[derive(Debug, Error)]
pub enum PlyError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
}

fn malformed(path: &Path, line: usize, message: impl Into<String>) -> PlyError {
    PlyError::Malformed {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Write a cloud as ASCII PLY.
pub fn write_ply(path: &Path, cloud: &PointCloud) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    if cloud.labels.is_some() {
        writeln!(out, "property uchar label")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        match &cloud.labels {
            Some(ls) => writeln!(out, "{} {} {} {}", p.x, p.y, p.z, ls[i].code())?,
            None => writeln!(out, "{} {} {}", p.x, p.y, p.z)?,
        }
    }
    out.flush()
}

/// Read an ASCII PLY vertex cloud.
pub fn read_ply(path: &Path) -> Result<PointCloud, PlyError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let mut next_line = || -> Result<Option<(usize, String)>, PlyError> {
        match lines.next() {
            None => Ok(None),
            Some((i, Ok(l))) => Ok(Some((i + 1, l))),
            Some((i, Err(e))) => Err(malformed(path, i + 1, e.to_string())),
        }
    };

    // Header.
    let (ln, magic) = next_line()?.ok_or_else(|| malformed(path, 1, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(malformed(path, ln, "missing 'ply' magic"));
    }
    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    let mut in_vertex_element = false;
    let header_end_line;
    loop {
        let (ln, line) = next_line()?.ok_or_else(|| malformed(path, 0, "unterminated header"))?;
        let line = line.trim().to_string();
        if line == "end_header" {
            header_end_line = ln;
            break;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => {
                if words.next() != Some("ascii") {
                    return Err(malformed(path, ln, "only ascii format is supported"));
                }
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = words.next().unwrap_or("");
                let count: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| malformed(path, ln, "bad element count"))?;
                if name == "vertex" {
                    vertex_count = Some(count);
                    in_vertex_element = true;
                } else {
                    in_vertex_element = false;
                }
            }
            Some("property") => {
                if in_vertex_element {
                    let ty = words.next().unwrap_or("");
                    let name = words.next().unwrap_or("");
                    if ty == "list" {
                        return Err(malformed(path, ln, "list properties are not supported"));
                    }
                    properties.push(name.to_string());
                }
            }
            Some(other) => {
                return Err(malformed(path, ln, format!("unexpected header keyword '{other}'")));
            }
        }
    }
    let vertex_count =
        vertex_count.ok_or_else(|| malformed(path, header_end_line, "no vertex element"))?;
    let ix = |name: &str| properties.iter().position(|p| p == name);
    let (xi, yi, zi) = match (ix("x"), ix("y"), ix("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(malformed(path, header_end_line, "vertex element lacks x/y/z")),
    };
    let li = ix("label");

    let mut points = Vec::with_capacity(vertex_count);
    let mut labels = li.map(|_| Vec::with_capacity(vertex_count));
    while points.len() < vertex_count {
        let (ln, line) = next_line()?.ok_or_else(|| {
            malformed(path, header_end_line, format!("expected {vertex_count} vertices"))
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < properties.len() {
            return Err(malformed(
                path,
                ln,
                format!("expected {} fields, found {}", properties.len(), fields.len()),
            ));
        }
        let coord = |i: usize| -> Result<f64, PlyError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| malformed(path, ln, format!("bad coordinate '{}'", fields[i])))
        };
        let p = Vec3::new(coord(xi)?, coord(yi)?, coord(zi)?);
        if !p.is_finite() {
            return Err(malformed(path, ln, "non-finite coordinate"));
        }
        points.push(p);
        if let (Some(i), Some(ls)) = (li, labels.as_mut()) {
            let code: u8 = fields[i]
                .parse()
                .map_err(|_| malformed(path, ln, format!("bad label '{}'", fields[i])))?;
            let label = PartLabel::from_code(code)
                .ok_or_else(|| malformed(path, ln, format!("unknown label code {code}")))?;
            ls.push(label);
        }
    }

    Ok(PointCloud { points, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = testutil::rng(211);
        let points: Vec<Vec3> = (0..500)
            .map(|_| testutil::rand_vec3(&mut rng, 2.0) * (1.0 / 3.0))
            .collect();
        let labels = (0..500)
            .map(|i| PartLabel::from_code((i % 5) as u8).unwrap())
            .collect();
        let cloud = PointCloud::with_labels(points, labels);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.ply");
        write_ply(&path, &cloud).unwrap();
        let back = read_ply(&path).unwrap();
        assert_eq!(back.len(), cloud.len());
        for (p, q) in cloud.points.iter().zip(&back.points) {
            assert_eq!(p.x.to_bits(), q.x.to_bits());
            assert_eq!(p.y.to_bits(), q.y.to_bits());
            assert_eq!(p.z.to_bits(), q.z.to_bits());
        }
        assert_eq!(cloud.labels, back.labels);
    }

    #[test]
    fn reads_float_typed_unlabeled_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.ply");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "ply\nformat ascii 1.0\ncomment hand written").unwrap();
        writeln!(f, "element vertex 2\nproperty float x\nproperty float y\nproperty float z").unwrap();
        writeln!(f, "end_header\n0.5 1.5 -2.0\n1 2 3").unwrap();
        let cloud = read_ply(&path).unwrap();
        assert_eq!(cloud.len(), 2);
        assert!(cloud.labels.is_none());
        assert_eq!(cloud.points[1], Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn parse_error_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.ply");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "ply\nformat ascii 1.0\nelement vertex 2").unwrap();
        writeln!(f, "property double x\nproperty double y\nproperty double z").unwrap();
        writeln!(f, "end_header\n0 0 0\n0 zero 0").unwrap();
        match read_ply(&path) {
            Err(PlyError::Malformed { line, .. }) => assert_eq!(line, 9),
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.ply");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "ply\nformat ascii 1.0\nelement vertex 5").unwrap();
        writeln!(f, "property double x\nproperty double y\nproperty double z").unwrap();
        writeln!(f, "end_header\n0 0 0").unwrap();
        assert!(matches!(read_ply(&path), Err(PlyError::Malformed { .. })));
    }
}
