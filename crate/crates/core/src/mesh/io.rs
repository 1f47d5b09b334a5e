use super::TriMesh;
use crate::error::{Error, Result};
use crate::geom::Vec2;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

const HEADER: &str = "trimesh 2d v1";

/// Writes the plain-text mesh format:
///
/// ```text
/// trimesh 2d v1
/// vertices N
/// x y b        (b = 1 for boundary vertices)
/// triangles T
/// i j k
/// ```
pub fn write_mesh<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "vertices {}", mesh.n_vertices())?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(w, "{:.16e} {:.16e} {}", p.x, p.y, u8::from(mesh.is_boundary(i)))?;
    }
    writeln!(w, "triangles {}", mesh.n_triangles())?;
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Reads the format produced by [`write_mesh`]. Boundary flags in the file
/// must agree with the topology.
pub fn read_mesh<R: BufRead>(r: R) -> Result<TriMesh> {
    let mut lines = r
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(s))) => Ok((n, s)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    };
    let parse_err = |line: usize, message: String| Error::Parse { line, message };

    let (n, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(parse_err(n, format!("expected '{HEADER}', found '{}'", header.trim())));
    }
    let count = |line: usize, s: &str, key: &str| -> Result<usize> {
        let mut it = s.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(k), Some(Ok(c)), None) if k == key => Ok(c),
            _ => Err(parse_err(line, format!("expected '{key} <count>'"))),
        }
    };

    let (n, s) = next("vertex count")?;
    let nv = count(n, &s, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for i in 0..nv {
        let (n, s) = next("vertex record")?;
        let f: Vec<&str> = s.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(n, format!("vertex {i}: expected 'x y b'")));
        }
        let x: f64 = f[0]
            .parse()
            .map_err(|_| parse_err(n, format!("vertex {i}: bad x coordinate")))?;
        let y: f64 = f[1]
            .parse()
            .map_err(|_| parse_err(n, format!("vertex {i}: bad y coordinate")))?;
        let b = match f[2] {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err(n, format!("vertex {i}: boundary flag must be 0 or 1"))),
        };
        vertices.push(Vec2::new(x, y));
        flags.push((n, b));
    }

    let (n, s) = next("triangle count")?;
    let nt = count(n, &s, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (n, s) = next("triangle record")?;
        let f: Vec<&str> = s.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(n, format!("triangle {t}: expected 'i j k'")));
        }
        let mut tri = [0usize; 3];
        for (k, tok) in f.iter().enumerate() {
            let v: usize = tok
                .parse()
                .map_err(|_| parse_err(n, format!("triangle {t}: bad vertex index '{tok}'")))?;
            if v >= nv {
                return Err(parse_err(
                    n,
                    format!("triangle {t} references missing vertex {v}"),
                ));
            }
            tri[k] = v;
        }
        triangles.push(tri);
    }
    if let Some((n, s)) = lines.next().and_then(|(n, l)| l.ok().map(|s| (n, s))) {
        return Err(parse_err(n, format!("trailing content '{}'", s.trim())));
    }

    let mesh = TriMesh::new(vertices, triangles)?;
    for (i, &(line, b)) in flags.iter().enumerate() {
        if mesh.is_boundary(i) != b {
            return Err(parse_err(
                line,
                format!("vertex {i}: boundary flag {} disagrees with topology", u8::from(b)),
            ));
        }
    }
    Ok(mesh)
}

/// A named field attached to a VTK export.
pub enum VtkField<'a> {
    PointScalar(&'a str, &'a [f64]),
    CellScalar(&'a str, &'a [f64]),
    CellVector(&'a str, &'a [Vec2]),
}

/// Writes a legacy ASCII VTK unstructured grid.
pub fn write_vtk<W: Write>(mesh: &TriMesh, fields: &[VtkField<'_>], mut w: W) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\nmesh\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p.x, p.y);
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let mut point_header = false;
    for f in fields {
        if let VtkField::PointScalar(name, v) = f {
            crate::error::check_len("vtk point field", mesh.n_vertices(), v.len())?;
            if !point_header {
                let _ = writeln!(s, "POINT_DATA {}", mesh.n_vertices());
                point_header = true;
            }
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for x in *v {
                let _ = writeln!(s, "{x:.16e}");
            }
        }
    }
    let mut cell_header = false;
    for f in fields {
        let mut header = |s: &mut String| {
            if !cell_header {
                let _ = writeln!(s, "CELL_DATA {nt}");
                cell_header = true;
            }
        };
        match f {
            VtkField::CellScalar(name, v) => {
                crate::error::check_len("vtk cell field", nt, v.len())?;
                header(&mut s);
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in *v {
                    let _ = writeln!(s, "{x:.16e}");
                }
            }
            VtkField::CellVector(name, v) => {
                crate::error::check_len("vtk cell field", nt, v.len())?;
                header(&mut s);
                let _ = writeln!(s, "VECTORS {name} double");
                for x in *v {
                    let _ = writeln!(s, "{:.16e} {:.16e} 0", x.x, x.y);
                }
            }
            VtkField::PointScalar(..) => {}
        }
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}
