//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits with a failure status if any criterion fails.

mod common;

use abmesh::clement::clement_gradient;
use abmesh::forward::{assemble_darcy_operators, observation_grid};
use abmesh::geom::Vec2;
use abmesh::ias::{match_phase_two, theta_update, HyperPrior};
use abmesh::metric::build_metric;
use abmesh::pipeline::{prepare_problem, run_problem, ExperimentConfig, RunOutput};
use abmesh::sparse::{cgls_solve, CglsOptions, CglsStop, LinOp};
use abmesh::whitney::assemble_incidence;
use common::*;
use rand::Rng;
use statrs::function::gamma::ln_gamma;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Runs {
    tomo: RunOutput,
    tomo_seconds: f64,
    iso: RunOutput,
    darcy: RunOutput,
    /// Largest compatibility residual over the small IAS instances.
    oracle_compatibility: f64,
}

fn theta_oracle_criterion() -> Outcome {
    let start = Instant::now();
    let mut g = rng(1);
    let mut worst = 0.0f64;
    for r in [1.0, 0.5] {
        for _ in 0..1000 {
            let z = g.random_range(-1.0..1.0) * 10f64.powf(g.random_range(-3.0..2.0));
            let v = 10f64.powf(g.random_range(-3.0..1.0));
            let eta = 10f64.powf(g.random_range(-4.0..1.0));
            let beta = (1.5 + eta) / r;
            let t = theta_update(&[z], &HyperPrior::new(r, beta, vec![v])).map_err(|e| e.to_string())?[0];
            let o = theta_oracle(z, v, r, beta);
            worst = worst.max(((t - o) / o).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs < 10.0,
        format!("max relative difference {worst:.2e} over 2000 triples in {secs:.2} s"),
    )
}

fn cgls_criterion(runs: &Runs) -> Outcome {
    let mut g = rng(5);
    let mut fired = 0;
    for _ in 0..500 {
        let rows = g.random_range(3..60);
        let cols = g.random_range(3..60);
        let a = random_matrix(&mut g, rows, cols, 1.0);
        let b: Vec<f64> = gaussian(&mut g, rows).iter().map(|v| 4.0 * v).collect();
        let m = rows as f64 * g.random_range(0.1..1.0);
        let res = cgls_solve(&a, &b, &CglsOptions::regularizing(m)).map_err(|e| e.to_string())?;
        if res.residual_norms.windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("residual increased on a {rows}x{cols} instance"));
        }
        if res.stop == CglsStop::Discrepancy {
            fired += 1;
            let r: Vec<f64> = a.mul(&res.w).iter().zip(&b).map(|(p, q)| q - p).collect();
            if norm(&r).powi(2) >= m {
                return Err("discrepancy rule fired above its threshold".into());
            }
        }
    }
    let pipeline = [&runs.tomo, &runs.iso, &runs.darcy];
    let entries: Vec<_> = pipeline
        .iter()
        .flat_map(|o| o.report.iterations.iter().flat_map(|r| r.cgls.iter()))
        .collect();
    let monotone = entries.iter().all(|c| c.monotone);
    check(
        monotone && fired > 0,
        format!(
            "500 random solves ({fired} discrepancy stops) and {} pipeline z-updates, all non-increasing: {monotone}",
            entries.len()
        ),
    )
}

fn matching_criterion() -> Outcome {
    let v1 = 0.05;
    let mut worst = 0.0f64;
    for eta in [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
        let (b2, v2) = match_phase_two(eta, v1).map_err(|e| e.to_string())?;
        let first = v2 * (b2 - 3.0).powi(2) / (v1 * eta) - 1.0;
        let second = v2 * (ln_gamma(b2 + 2.0) - ln_gamma(b2)).exp() / (v1 * (1.5 + eta)) - 1.0;
        worst = worst.max(first.abs()).max(second.abs());
    }
    check(worst <= 1e-8, format!("max relative residual {worst:.2e}"))
}

fn clement_criterion() -> Outcome {
    let mut worst_const = 0.0f64;
    let mut worst_lin = 0.0f64;
    for mesh in [square(0.05), disc(0.05)] {
        let inc = assemble_incidence(&mesh);
        let u = nodal(&mesh, |p| -1.7 * p.x + 0.9 * p.y + 2.0);
        let grad = clement_gradient(&mesh, &inc.full.mul(&u)).map_err(|e| e.to_string())?;
        for g in grad {
            worst_const = worst_const.max((g.x + 1.7).abs()).max((g.y - 0.9).abs());
        }
        let mut r = rng(3);
        let z1 = gaussian(&mut r, mesh.n_edges());
        let z2 = gaussian(&mut r, mesh.n_edges());
        let k = -2.5;
        let zc: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a + k * b).collect();
        let g1 = clement_gradient(&mesh, &z1).map_err(|e| e.to_string())?;
        let g2 = clement_gradient(&mesh, &z2).map_err(|e| e.to_string())?;
        let gc = clement_gradient(&mesh, &zc).map_err(|e| e.to_string())?;
        for i in 0..mesh.n_vertices() {
            let d = gc[i] - (g1[i] + g2[i] * k);
            worst_lin = worst_lin.max(d.norm() / (1.0 + gc[i].norm()));
        }
    }
    check(
        worst_const <= 1e-12 && worst_lin <= 1e-12,
        format!("constant field error {worst_const:.2e}, linearity defect {worst_lin:.2e}"),
    )
}

fn calibration_criterion() -> Outcome {
    let mesh = disc(0.1);
    let (h_min, h_max, alpha) = (0.01, 0.1, 12.0f64);
    let m = 9.0;
    let delta = alpha.sqrt() * h_min * m / h_max;
    let e = Vec2::new(0.28, -0.96);
    let mut grad = vec![Vec2::new(0.0, 0.0); mesh.n_vertices()];
    grad[0] = e * m;
    grad[1] = e * (delta * (1.0 + 1e-13));
    let f = build_metric(&mesh, &grad, h_min, h_max, alpha).map_err(|e| e.to_string())?;
    let parallel = f.tensors()[0].quad(e * h_min).sqrt();
    let perpendicular = f.tensors()[1].quad(e.perp() * h_max).sqrt();
    check(
        (parallel - 1.0).abs() <= 1e-10 && (perpendicular - 1.0).abs() <= 1e-10,
        format!("parallel h_min length {parallel:.12}, perpendicular h_max length {perpendicular:.12}"),
    )
}

fn remesh_criterion(runs: &Runs) -> Outcome {
    let r = &runs.tomo.report.iterations[0];
    let band = r.in_band_fraction.ok_or("no remesh in iteration 1")?;
    let before = r.conformity_before.ok_or("no conformity")?;
    let after = r.conformity_after.ok_or("no conformity")?;
    check(
        band >= 0.85 && after < before,
        format!("in band {:.1}%, conformity {before:.0} -> {after:.0}", 100.0 * band),
    )
}

fn tomography_criterion(runs: &Runs) -> Outcome {
    let it = &runs.tomo.report.iterations;
    if it.len() != 4 {
        return Err(format!("{} iterations completed", it.len()));
    }
    let counts: Vec<usize> = it.iter().map(|r| r.n_triangles).collect();
    let errors: Vec<String> = it.iter().map(|r| format!("{:.4}", r.relative_error)).collect();
    check(
        counts[3] < counts[1] && it[3].relative_error < it[0].relative_error && runs.tomo_seconds < 300.0,
        format!(
            "elements {counts:?}, errors [{}], {:.1} s",
            errors.join(", "),
            runs.tomo_seconds
        ),
    )
}

fn anisotropy_criterion(runs: &Runs) -> Outcome {
    let a = &runs.tomo.report.iterations;
    let i = &runs.iso.report.iterations;
    if a.len() < 2 || i.len() < 2 {
        return Err("runs stopped before iteration II".into());
    }
    let ratio = a[1].n_triangles as f64 / i[1].n_triangles as f64;
    let ta: f64 = a.iter().map(|r| r.times.solver).sum();
    let ti: f64 = i.iter().map(|r| r.times.solver).sum();
    check(
        ratio <= 0.7 && ta / ti <= 0.8,
        format!(
            "iteration II elements {} vs {} (ratio {ratio:.3}), solver time {ta:.2} s vs {ti:.2} s (ratio {:.3})",
            a[1].n_triangles,
            i[1].n_triangles,
            ta / ti
        ),
    )
}

fn cgls_economy_criterion(runs: &Runs) -> Outcome {
    let mut counts: Vec<usize> = runs
        .tomo
        .report
        .iterations
        .iter()
        .flat_map(|r| r.cgls_counts())
        .collect();
    counts.sort_unstable();
    let median = counts[counts.len() / 2];
    let max = *counts.last().unwrap();
    check(
        median <= 30 && max <= 100,
        format!("median {median}, max {max} over {} z-updates", counts.len()),
    )
}

fn darcy_criterion(runs: &Runs) -> Outcome {
    let obs = observation_grid(20);
    let mesh = square(0.05);
    let op = assemble_darcy_operators(&mesh, &obs).map_err(|e| e.to_string())?;
    let y = op.apply(&vec![1.0; mesh.n_vertices()]).map_err(|e| e.to_string())?;
    let err = obs
        .iter()
        .zip(&y)
        .map(|(p, v)| (v - p.x * (1.0 - p.x) / 2.0).abs())
        .fold(0.0, f64::max);
    let it = &runs.darcy.report.iterations;
    let counts: Vec<usize> = it.iter().map(|r| r.n_triangles).collect();
    check(
        err <= 1e-10 && it.len() == 4 && counts[3] < counts[1],
        format!("manufactured error {err:.2e}, Darcy elements {counts:?}"),
    )
}

fn compatibility_criterion(runs: &Runs) -> Outcome {
    let pipeline = [&runs.tomo, &runs.iso, &runs.darcy]
        .iter()
        .flat_map(|o| o.report.iterations.iter().map(|r| r.max_compatibility))
        .fold(0.0, f64::max);
    let worst = pipeline.max(runs.oracle_compatibility);
    check(
        worst <= 1e-8,
        format!("max ‖Q₂ᵀz‖/‖z‖ = {worst:.2e} over all z-updates"),
    )
}

fn prepare_runs() -> Result<Runs, String> {
    let config = ExperimentConfig::tomography();
    let start = Instant::now();
    let problem = prepare_problem(&config).map_err(|e| e.to_string())?;
    let tomo = run_problem(&problem).map_err(|e| e.to_string())?;
    let tomo_seconds = start.elapsed().as_secs_f64();
    let mut iso_problem = problem.clone();
    iso_problem.config.mesh.alpha = 1.0;
    let iso = run_problem(&iso_problem).map_err(|e| e.to_string())?;
    let darcy = prepare_problem(&ExperimentConfig::darcy())
        .and_then(|p| run_problem(&p).map_err(|f| f.error))
        .map_err(|e| e.to_string())?;
    Ok(Runs {
        tomo,
        tomo_seconds,
        iso,
        darcy,
        oracle_compatibility: 0.0,
    })
}

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().ok();

    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let guard = |f: &mut dyn FnMut() -> Outcome| -> Outcome {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        })
    };

    let mut oracle_compat = 0.0f64;
    results.push(("theta-update oracle", guard(&mut theta_oracle_criterion)));
    results.push((
        "l1 limit",
        guard(&mut || {
            let start = Instant::now();
            let (gap, nnz, c) = l1_limit_gap(7);
            oracle_compat = oracle_compat.max(c);
            let secs = start.elapsed().as_secs_f64();
            check(
                gap <= 1e-3 && nnz >= 2 && secs < 30.0,
                format!("relative gap {gap:.2e}, {nnz} nonzeros, {secs:.2} s"),
            )
        }),
    ));
    results.push((
        "uniqueness",
        guard(&mut || {
            let (dz, dt, c) = uniqueness_gap(11);
            oracle_compat = oracle_compat.max(c);
            check(dz <= 1e-4 && dt <= 1e-4, format!("z gap {dz:.2e}, theta gap {dt:.2e}"))
        }),
    ));

    let runs = prepare_runs().map(|mut r| {
        r.oracle_compatibility = oracle_compat;
        r
    });
    let with_runs = |f: fn(&Runs) -> Outcome| -> Outcome {
        match &runs {
            Ok(r) => catch_unwind(AssertUnwindSafe(|| f(r))).unwrap_or_else(|_| Err("panic".into())),
            Err(e) => Err(format!("pipeline run failed: {e}")),
        }
    };
    results.push(("compatibility", with_runs(compatibility_criterion)));
    results.push(("CGLS behaviour", with_runs(cgls_criterion)));
    results.push(("phase II matching", guard(&mut matching_criterion)));
    results.push(("Clement interpolation", guard(&mut clement_criterion)));
    results.push(("metric calibration", guard(&mut calibration_criterion)));
    results.push(("remesher quality", with_runs(remesh_criterion)));
    results.push(("tomography reproduction", with_runs(tomography_criterion)));
    results.push(("anisotropy advantage", with_runs(anisotropy_criterion)));
    results.push(("CGLS economy", with_runs(cgls_economy_criterion)));
    results.push(("Darcy forward model", with_runs(darcy_criterion)));

    let mut failed = 0;
    for (k, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
