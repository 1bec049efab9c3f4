//! Line-based `mesh2d v1` text format.
//!
//! ```text
//! mesh2d v1
//! vertices N
//! x y            (N lines)
//! triangles K
//! i j k label    (K lines)
//! edges E
//! i j marker     (E lines; marker is int, bnd or ifc:<m>)
//! ```
//! Indices are 0-based, `#` starts a comment.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::{EdgeMarker, Mesh, Triangle};
use crate::error::{Error, Result};
use crate::geometry::Point;

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_mesh(mesh, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_mesh(mesh: &Mesh, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "mesh2d v1")?;
    writeln!(w, "vertices {}", mesh.num_vertices())?;
    for p in mesh.vertices() {
        writeln!(w, "{:e} {:e}", p.x, p.y)?;
    }
    writeln!(w, "triangles {}", mesh.num_triangles())?;
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        writeln!(w, "{a} {b} {c} {}", t.label)?;
    }
    writeln!(w, "edges {}", mesh.edges().len())?;
    for e in mesh.edges() {
        writeln!(w, "{} {} {}", e.vertices[0], e.vertices[1], e.marker)?;
    }
    Ok(())
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: PathBuf,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    /// Next non-empty line with comments stripped, as (line number, tokens).
    fn next_tokens(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                self.last = i + 1;
                return Ok((i + 1, tokens));
            }
        }
        Err(self.err(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let (line, tokens) = self.next_tokens(name)?;
        match tokens.as_slice() {
            [head, count] if *head == name => count
                .parse()
                .map_err(|_| self.err(line, format!("invalid {name} count '{count}'"))),
            _ => Err(self.err(line, format!("expected '{name} <count>', found '{}'", tokens.join(" ")))),
        }
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines<'_>, line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| lines.err(line, format!("invalid {what} '{token}'")))
}

/// Parses mesh text; `path` is used only in error messages.
pub fn parse_mesh(text: &str, path: impl AsRef<Path>) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path: path.as_ref().to_path_buf(),
        last: 0,
    };
    let (line, header) = lines.next_tokens("header")?;
    if header != ["mesh2d", "v1"] {
        return Err(lines.err(line, format!("expected header 'mesh2d v1', found '{}'", header.join(" "))));
    }

    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, tok) = lines.next_tokens("vertex")?;
        if tok.len() != 2 {
            return Err(lines.err(line, format!("vertex needs 2 coordinates, found {}", tok.len())));
        }
        let x: f64 = parse_num(&lines, line, tok[0], "coordinate")?;
        let y: f64 = parse_num(&lines, line, tok[1], "coordinate")?;
        vertices.push(Point::new(x, y));
    }

    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, tok) = lines.next_tokens("triangle")?;
        if tok.len() != 4 {
            return Err(lines.err(line, format!("triangle needs 'i j k label', found {} fields", tok.len())));
        }
        let mut idx = [0usize; 3];
        for (k, slot) in idx.iter_mut().enumerate() {
            *slot = parse_num(&lines, line, tok[k], "vertex index")?;
            if *slot >= nv {
                return Err(lines.err(line, format!("vertex index {} out of range (N = {nv})", *slot)));
            }
        }
        let label = parse_num(&lines, line, tok[3], "label")?;
        triangles.push(Triangle { vertices: idx, label });
    }

    let ne = lines.section("edges")?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (line, tok) = lines.next_tokens("edge")?;
        if tok.len() != 3 {
            return Err(lines.err(line, format!("edge needs 'i j marker', found {} fields", tok.len())));
        }
        let a: usize = parse_num(&lines, line, tok[0], "vertex index")?;
        let b: usize = parse_num(&lines, line, tok[1], "vertex index")?;
        let marker = match tok[2] {
            "int" => EdgeMarker::Interior,
            "bnd" => EdgeMarker::Boundary,
            other => match other.strip_prefix("ifc:") {
                Some(m) => EdgeMarker::Interface(parse_num(&lines, line, m, "interface label")?),
                None => return Err(lines.err(line, format!("unknown edge marker '{other}'"))),
            },
        };
        edges.push(([a, b], marker));
    }
    if let Ok((line, tok)) = lines.next_tokens("end of file") {
        return Err(lines.err(line, format!("trailing content '{}'", tok.join(" "))));
    }

    Mesh::from_parts(vertices, triangles, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
mesh2d v1
# unit square
vertices 4
0 0
1 0
1 1
0 1
triangles 2
0 1 2 0
0 2 3 1
edges 5
0 1 bnd
1 2 bnd
2 3 bnd
0 3 bnd
0 2 ifc:1
";

    #[test]
    fn parses_square() {
        let m = parse_mesh(SQUARE, "square.mesh").unwrap();
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.edges().iter().filter(|e| e.marker == EdgeMarker::Interface(1)).count(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let bad = SQUARE.replace("1 1\n", "1 oops\n");
        match parse_mesh(&bad, "bad.mesh").unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 6);
                assert!(message.contains("oops"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn unknown_marker_rejected() {
        let bad = SQUARE.replace("0 2 ifc:1", "0 2 weird");
        assert!(matches!(parse_mesh(&bad, "x").unwrap_err(), Error::Parse { line: 16, .. }));
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(matches!(parse_mesh("mesh3d v1\n", "x").unwrap_err(), Error::Parse { line: 1, .. }));
    }
}
