//! Tables and files written after a run.

use super::run::{sample_field, ComparisonRow, IterationReport, RunOutput, RunReport};
use crate::error::{Error, Result};
use crate::geom::Sym2;
use crate::mesh::{write_mesh, write_vtk, TriMesh, VtkField};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `iteration,phase,ias_iteration,cgls_iterations,stop`.
pub fn write_cgls_csv<W: Write>(w: &mut W, reports: &[IterationReport]) -> Result<()> {
    writeln!(w, "iteration,phase,ias_iteration,cgls_iterations,stop")?;
    for r in reports {
        for c in &r.cgls {
            writeln!(
                w,
                "{},{},{},{},{:?}",
                r.iteration, c.phase, c.ias_iteration, c.cgls_iterations, c.stop
            )?;
        }
    }
    Ok(())
}

/// Parses [`write_cgls_csv`] output back into `(iteration, counts)` pairs.
pub fn read_cgls_csv(text: &str) -> Result<Vec<(usize, Vec<usize>)>> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| {
            s.trim().parse::<usize>().map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        };
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let it = parse(fields[0])?;
        let count = parse(fields[3])?;
        match out.last_mut() {
            Some((last, counts)) if *last == it => counts.push(count),
            _ => out.push((it, vec![count])),
        }
    }
    Ok(out)
}

pub fn write_mesh_stats_csv<W: Write>(w: &mut W, reports: &[IterationReport]) -> Result<()> {
    writeln!(
        w,
        "iteration,n_triangles,n_vertices,n_edges,n_unknowns,sigma_eff,ias_updates,cgls_total,relative_error,\
conformity_before,conformity_after,in_band_fraction,remesh_sweeps,remesh_stalled,next_triangles,\
forward_s,solver_s,gradient_s,metric_s,remesh_s"
    )?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.6e}"));
    for r in reports {
        let t = &r.times;
        writeln!(
            w,
            "{},{},{},{},{},{:.6e},{},{},{:.6e},{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4}",
            r.iteration,
            r.n_triangles,
            r.n_vertices,
            r.n_edges,
            r.n_unknowns,
            r.sigma_eff,
            r.cgls.len(),
            r.cgls_counts().iter().sum::<usize>(),
            r.relative_error,
            opt(r.conformity_before),
            opt(r.conformity_after),
            opt(r.in_band_fraction),
            r.remesh.as_ref().map_or(String::new(), |a| a.sweeps.to_string()),
            r.remesh.as_ref().map_or(String::new(), |a| a.stalled.to_string()),
            r.next_triangles.map_or(String::new(), |n| n.to_string()),
            t.forward,
            t.solver,
            t.gradient,
            t.metric,
            t.remesh
        )?;
    }
    Ok(())
}

pub fn write_energy_csv<W: Write>(w: &mut W, reports: &[IterationReport]) -> Result<()> {
    writeln!(w, "iteration,phase,ias_iteration,energy")?;
    for r in reports {
        for e in &r.energy {
            writeln!(w, "{},{},{},{:.12e}", r.iteration, e.phase, e.ias_iteration, e.energy)?;
        }
    }
    Ok(())
}

pub fn write_comparison_csv<W: Write>(w: &mut W, rows: &[ComparisonRow]) -> Result<()> {
    writeln!(w, "iteration,n_triangles_anisotropic,n_triangles_isotropic,ratio,solver_s_anisotropic,solver_s_isotropic")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{:.4},{:.4},{:.4}",
            r.iteration,
            r.n_triangles_anisotropic,
            r.n_triangles_isotropic,
            r.n_triangles_anisotropic as f64 / r.n_triangles_isotropic as f64,
            r.solver_seconds_anisotropic,
            r.solver_seconds_isotropic
        )?;
    }
    Ok(())
}

/// `x,y,g11,g12,g22` per vertex.
pub fn write_metric_csv<W: Write>(w: &mut W, mesh: &TriMesh, tensors: &[Sym2]) -> Result<()> {
    writeln!(w, "x,y,g11,g12,g22")?;
    for (p, g) in mesh.vertices().iter().zip(tensors) {
        writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}", p.x, p.y, g.xx, g.xy, g.yy)?;
    }
    Ok(())
}

/// `x,y,u` per vertex.
pub fn write_field_csv<W: Write>(w: &mut W, mesh: &TriMesh, u: &[f64]) -> Result<()> {
    writeln!(w, "x,y,u")?;
    for (p, v) in mesh.vertices().iter().zip(u) {
        writeln!(w, "{:.12e},{:.12e},{:.12e}", p.x, p.y, v)?;
    }
    Ok(())
}

/// Tables derived from the report alone.
pub fn write_tables(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.iterations.is_empty() {
        return Err(Error::InvalidInput("no iterations to report".into()));
    }
    fs::create_dir_all(dir)?;
    write_cgls_csv(&mut create(dir, "cgls_counts.csv")?, &report.iterations)?;
    write_mesh_stats_csv(&mut create(dir, "mesh_stats.csv")?, &report.iterations)?;
    write_energy_csv(&mut create(dir, "energy.csv")?, &report.iterations)?;
    Ok(["cgls_counts.csv", "mesh_stats.csv", "energy.csv"]
        .iter()
        .map(|n| dir.join(n))
        .collect())
}

/// Tables, `report.json`, and per-iteration meshes, fields, metrics and
/// profiles.
pub fn write_reports(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = write_tables(&out.report, dir)?;
    let json = serde_json::to_string_pretty(&out.report)
        .map_err(|e| Error::InvalidInput(format!("cannot serialize report: {e}")))?;
    fs::write(dir.join("report.json"), json)?;
    files.push(dir.join("report.json"));
    let profile = out.report.config.profile();
    let points = profile.points();
    for (r, art) in out.report.iterations.iter().zip(&out.artifacts) {
        let k = r.iteration;
        let name = format!("mesh_{k}.txt");
        write_mesh(&art.mesh, &mut create(dir, &name)?)?;
        files.push(dir.join(name));
        let name = format!("reconstruction_{k}.csv");
        write_field_csv(&mut create(dir, &name)?, &art.mesh, &art.u)?;
        files.push(dir.join(name));
        let name = format!("reconstruction_{k}.vtk");
        write_vtk(&art.mesh, &[VtkField::PointScalar("u", &art.u)], &mut create(dir, &name)?)?;
        files.push(dir.join(name));
        if let Some(g) = &art.metric {
            let name = format!("metric_{k}.csv");
            write_metric_csv(&mut create(dir, &name)?, &art.mesh, g)?;
            files.push(dir.join(name));
        }
        let values = sample_field(&art.mesh, &art.u, &points);
        let name = format!("profile_{k}.csv");
        let mut w = create(dir, &name)?;
        writeln!(w, "x,y,u")?;
        for (p, v) in points.iter().zip(values) {
            writeln!(w, "{:.12e},{:.12e},{:.12e}", p.x, p.y, v)?;
        }
        files.push(dir.join(name));
    }
    Ok(files)
}

pub fn read_report(dir: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(dir.join("report.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
