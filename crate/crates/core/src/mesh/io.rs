//! Plain-text mesh format.
//!
//! ```text
//! polymesh 1
//! NV NC
//! x y            (NV lines)
//! k v0 .. vk-1   (NC lines, counter-clockwise, 0-based)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so a write/read
//! cycle reproduces every coordinate bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::geometry::Point2;

const HEADER: &str = "polymesh 1";

pub fn write_mesh<W: Write>(mesh: &PolyMesh, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {}", mesh.n_points(), mesh.n_cells())?;
    for p in mesh.points() {
        writeln!(out, "{:?} {:?}", p.x, p.y)?;
    }
    for c in mesh.cells() {
        let verts = mesh.cell_vertices(c);
        write!(out, "{}", verts.len())?;
        for v in verts {
            write!(out, " {}", v.0)?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mesh_file(mesh: &PolyMesh, path: impl AsRef<Path>) -> Result<()> {
    let f = fs::File::create(path)?;
    write_mesh(mesh, std::io::BufWriter::new(f))
}

pub fn read_mesh<R: Read>(input: R) -> Result<PolyMesh> {
    let reader = BufReader::new(input);
    let mut lines = reader
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    };
    let parse_err = |line, message: String| Error::Parse { line, message };

    let (n, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(parse_err(n, format!("expected `{HEADER}`, found `{}`", header.trim())));
    }
    let (n, counts) = next("counts")?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad count `{t}`"))))
        .collect::<Result<_>>()?;
    let [nv, nc] = counts[..] else {
        return Err(parse_err(n, "expected `NV NC`".into()));
    };

    let mut points = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next("a point")?;
        let xy: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        let [x, y] = xy[..] else {
            return Err(parse_err(n, "expected `x y`".into()));
        };
        points.push(Point2::new(x, y));
    }

    let mut loops = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, l) = next("a cell")?;
        let ids: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(n, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        let Some((&k, rest)) = ids.split_first() else {
            return Err(parse_err(n, "empty cell line".into()));
        };
        if k != rest.len() {
            return Err(parse_err(n, format!("cell declares {k} vertices but lists {}", rest.len())));
        }
        loops.push(rest.to_vec());
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing content".into()));
    }
    PolyMesh::build(points, &loops)
}

pub fn read_mesh_file(path: impl AsRef<Path>) -> Result<PolyMesh> {
    read_mesh(fs::File::open(path)?)
}
