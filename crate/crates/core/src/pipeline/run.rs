//! The outer adaptive loop.

use super::config::{ExperimentConfig, ProblemKind};
use crate::clement::clement_gradient;
use crate::error::{Error, Result};
use crate::forward::{
    add_noise, assemble_darcy_operators, make_phantom, observation_grid, tomo_apply,
    tomo_system_matrix, ForwardMatrix, SyntheticData,
};
use crate::geom::{Sym2, Vec2};
use crate::ias::{ias_solve, IasState};
use crate::mesh::{generate_initial_mesh, DomainSpec, PointLocator, TriMesh};
use crate::metric::{build_metric, in_band_fraction, metric_conformity, MetricCalibration};
use crate::quadrature::DEGREE2;
use crate::remesh::{adapt_mesh, AdaptOptions, AdaptReport};
use crate::sparse::CglsStop;
use crate::whitney::assemble_incidence;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Fine-mesh target and the data generated from it.
#[derive(Debug, Clone)]
pub struct Problem {
    pub config: ExperimentConfig,
    pub truth_mesh: TriMesh,
    pub truth: Vec<f64>,
    pub data: SyntheticData,
}

/// Builds the truth mesh, the phantom on it and the noisy data.
pub fn prepare_problem(config: &ExperimentConfig) -> Result<Problem> {
    config.validate()?;
    let shape = config.problem.domain();
    if config.mesh.truth_h >= config.mesh.h_init {
        log::warn!(
            "truth mesh (h = {}) is not finer than the initial inversion mesh (h = {})",
            config.mesh.truth_h,
            config.mesh.h_init
        );
    }
    let truth_mesh = generate_initial_mesh(&DomainSpec {
        shape,
        h: config.mesh.truth_h,
    })
    .map_err(|e| e.in_stage("phantom"))?;
    let truth = make_phantom(&config.phantom(), &truth_mesh);
    let clean = match config.problem {
        ProblemKind::Tomography => tomo_apply(&truth_mesh, &config.tomography, &truth),
        ProblemKind::Darcy => {
            let op = assemble_darcy_operators(&truth_mesh, &observation_grid(config.darcy.grid))?;
            op.apply(&truth)
        }
    }
    .map_err(|e| e.in_stage("forward"))?;
    let data = add_noise(clean, config.noise, config.seed)?;
    Ok(Problem {
        config: config.clone(),
        truth_mesh,
        truth,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CglsEntry {
    pub phase: u8,
    pub ias_iteration: usize,
    pub cgls_iterations: usize,
    pub stop: CglsStop,
    /// Residual norms never increased over the CGLS iterates.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEntry {
    pub phase: u8,
    pub ias_iteration: usize,
    pub energy: f64,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub forward: f64,
    pub solver: f64,
    pub gradient: f64,
    pub metric: f64,
    pub remesh: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub n_triangles: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_unknowns: usize,
    pub sigma_eff: f64,
    pub cgls: Vec<CglsEntry>,
    pub energy: Vec<EnergyEntry>,
    pub times: StageTimes,
    pub max_compatibility: f64,
    pub relative_error: f64,
    /// `(β₂, ϑ₂*)` of Phase II when it ran.
    pub phase_two: Option<(f64, f64)>,
    pub metric_fallback: bool,
    pub calibration: Option<MetricCalibration>,
    /// Fraction of vertices on the anisotropic branch of the metric.
    pub anisotropic_fraction: Option<f64>,
    /// Conformity of this iteration's mesh and of the adapted mesh under the
    /// new metric; absent when no remeshing followed.
    pub conformity_before: Option<f64>,
    pub conformity_after: Option<f64>,
    pub in_band_fraction: Option<f64>,
    pub remesh: Option<AdaptReport>,
    pub next_triangles: Option<usize>,
}

impl IterationReport {
    pub fn cgls_counts(&self) -> Vec<usize> {
        self.cgls.iter().map(|c| c.cgls_iterations).collect()
    }
}

/// Per-iteration data kept in memory for writing files.
#[derive(Debug, Clone)]
pub struct IterationArtifacts {
    pub mesh: TriMesh,
    /// Reconstruction at every vertex (zero on the boundary).
    pub u: Vec<f64>,
    /// Metric tensors at the vertices of `mesh`, when computed.
    pub metric: Option<Vec<Sym2>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub sigma: f64,
    pub n_data: usize,
    pub iterations: Vec<IterationReport>,
    /// Why the loop ended before the configured count, if it did.
    pub stopped_early: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub artifacts: Vec<IterationArtifacts>,
}

/// A failed run: the error and every iteration completed before it.
#[derive(Debug, thiserror::Error)]
#[error("{error} (after {} completed iterations)", partial.len())]
pub struct RunFailure {
    #[source]
    pub error: Error,
    pub partial: Vec<IterationReport>,
}

impl From<Error> for RunFailure {
    fn from(error: Error) -> Self {
        RunFailure {
            error,
            partial: Vec::new(),
        }
    }
}

pub fn run_outer_loop(config: &ExperimentConfig) -> std::result::Result<RunOutput, RunFailure> {
    let problem = prepare_problem(config)?;
    run_problem(&problem)
}

/// Runs the loop on prepared data.
pub fn run_problem(problem: &Problem) -> std::result::Result<RunOutput, RunFailure> {
    let config = &problem.config;
    let mut mesh = generate_initial_mesh(&DomainSpec {
        shape: config.problem.domain(),
        h: config.mesh.h_init,
    })
    .map_err(|e| e.in_stage("mesh"))?;
    let truth_locator = ErrorMeter::new(&problem.truth_mesh, &problem.truth);
    let sigma = problem.data.sigma;
    let mut reports: Vec<IterationReport> = Vec::new();
    let mut artifacts = Vec::new();
    let mut stopped_early = None;
    for k in 1..=config.iterations {
        let last = k == config.iterations;
        match outer_iteration(problem, &mesh, k, sigma, !last, &truth_locator) {
            Ok((report, art, next)) => {
                let n_t = mesh.n_triangles();
                log::info!(
                    "iteration {k}: {} triangles, {} CGLS steps, error {:.4}",
                    n_t,
                    report.cgls_counts().iter().sum::<usize>(),
                    report.relative_error
                );
                reports.push(report);
                artifacts.push(art);
                if let Some(next) = next {
                    let change = (next.n_triangles() as f64 - n_t as f64).abs() / n_t as f64;
                    mesh = next;
                    if let Some(tol) = config.early_exit {
                        if change < tol && !last {
                            stopped_early = Some(format!(
                                "element count changed by {:.2}% after iteration {k}",
                                100.0 * change
                            ));
                            break;
                        }
                    }
                }
            }
            Err(error) => {
                return Err(RunFailure {
                    error,
                    partial: reports,
                })
            }
        }
    }
    Ok(RunOutput {
        report: RunReport {
            config: config.clone(),
            sigma,
            n_data: problem.data.noisy.len(),
            iterations: reports,
            stopped_early,
        },
        artifacts,
    })
}

/// Forward operator on interior vertices.
pub fn build_forward(config: &ExperimentConfig, mesh: &TriMesh) -> Result<ForwardMatrix> {
    match config.problem {
        ProblemKind::Tomography => Ok(ForwardMatrix::Sparse(
            tomo_system_matrix(mesh, &config.tomography)?.interior,
        )),
        ProblemKind::Darcy => {
            let op = assemble_darcy_operators(mesh, &observation_grid(config.darcy.grid))?;
            Ok(ForwardMatrix::Dense(op.forward_matrix()?))
        }
    }
}

/// Effective noise level: inflated on the first iteration only.
pub fn effective_sigma(config: &ExperimentConfig, iteration: usize, sigma: f64) -> f64 {
    if iteration == 1 {
        sigma.max(config.inflation * config.mesh.h_init)
    } else {
        sigma
    }
}

type IterationOutput = (IterationReport, IterationArtifacts, Option<TriMesh>);

fn outer_iteration(
    problem: &Problem,
    mesh: &TriMesh,
    k: usize,
    sigma: f64,
    remesh: bool,
    meter: &ErrorMeter,
) -> Result<IterationOutput> {
    let config = &problem.config;
    let mut times = StageTimes::default();

    let clock = Instant::now();
    let a = build_forward(config, mesh).map_err(|e| e.in_stage("forward"))?;
    let sigma_eff = effective_sigma(config, k, sigma);
    if !(sigma_eff > 0.0) {
        return Err(Error::Config("noise level must be positive for whitening".into()).in_stage("forward"));
    }
    let a = a.scaled(sigma_eff);
    let b: Vec<f64> = problem.data.noisy.iter().map(|x| x / sigma_eff).collect();
    let inc = assemble_incidence(mesh);
    times.forward = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let state = ias_solve(&a, &inc.reduced, &b, &config.ias, None).map_err(|e| e.in_stage("ias"))?;
    times.solver = clock.elapsed().as_secs_f64();

    let u_full = inc.scatter_vertices(&state.u)?;
    let relative_error = meter.relative_error(mesh, &u_full);
    let mut report = IterationReport {
        iteration: k,
        n_triangles: mesh.n_triangles(),
        n_vertices: mesh.n_vertices(),
        n_edges: mesh.n_edges(),
        n_unknowns: inc.n_interior_vertices(),
        sigma_eff,
        cgls: cgls_entries(&state),
        energy: state
            .history
            .iter()
            .map(|r| EnergyEntry {
                phase: r.phase,
                ias_iteration: r.iteration,
                energy: r.energy,
            })
            .collect(),
        times,
        max_compatibility: state.max_compatibility(),
        relative_error,
        phase_two: state.phase_two,
        metric_fallback: false,
        calibration: None,
        anisotropic_fraction: None,
        conformity_before: None,
        conformity_after: None,
        in_band_fraction: None,
        remesh: None,
        next_triangles: None,
    };
    let mut art = IterationArtifacts {
        mesh: mesh.clone(),
        u: u_full,
        metric: None,
    };
    if !remesh {
        return Ok((report, art, None));
    }

    let clock = Instant::now();
    let z_full = inc.scatter_edges(&state.z)?;
    let grad = clement_gradient(mesh, &z_full).map_err(|e| e.in_stage("gradient"))?;
    report.times.gradient = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let m = &config.mesh;
    let metric = build_metric(mesh, &grad, m.h_min, m.h_max, m.alpha)
        .map_err(|e| e.in_stage("metric"))?
        .clamped(m.h_min, m.h_max)
        .graded(m.gradation)
        .clamped(m.h_min, m.h_max);
    report.metric_fallback = metric.calibration.is_some_and(|c| c.fallback);
    report.calibration = metric.calibration;
    report.anisotropic_fraction = metric.calibration.map(|c| {
        grad.iter().filter(|g| !c.fallback && g.norm() > c.delta).count() as f64 / grad.len() as f64
    });
    report.times.metric = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let opts = AdaptOptions {
        max_sweeps: m.max_sweeps,
        ..AdaptOptions::new(config.problem.domain(), m.h_min, m.h_max)
    };
    let (next, adapt) = adapt_mesh(mesh, &metric, &opts).map_err(|e| e.in_stage("remesh"))?;
    report.times.remesh = clock.elapsed().as_secs_f64();

    report.conformity_before = Some(metric_conformity(mesh, &metric));
    report.conformity_after = Some(metric_conformity(&next, &metric));
    report.in_band_fraction = Some(in_band_fraction(&next, &metric));
    report.remesh = Some(adapt);
    report.next_triangles = Some(next.n_triangles());
    art.metric = Some(metric.tensors().to_vec());
    Ok((report, art, Some(next)))
}

fn cgls_entries(state: &IasState) -> Vec<CglsEntry> {
    state
        .history
        .iter()
        .map(|r| CglsEntry {
            phase: r.phase,
            ias_iteration: r.iteration,
            cgls_iterations: r.cgls_iterations,
            stop: r.cgls_stop,
            monotone: r.cgls_monotone,
        })
        .collect()
}

/// Relative L2 distance between a reconstruction and the fine-mesh truth,
/// integrated on the truth mesh.
pub struct ErrorMeter<'a> {
    truth_mesh: &'a TriMesh,
    truth: &'a [f64],
    norm: f64,
}

impl<'a> ErrorMeter<'a> {
    pub fn new(truth_mesh: &'a TriMesh, truth: &'a [f64]) -> Self {
        let norm = Self::integrate(truth_mesh, truth, |_| 0.0).sqrt();
        ErrorMeter {
            truth_mesh,
            truth,
            norm,
        }
    }

    fn integrate(mesh: &TriMesh, values: &[f64], other: impl Fn(Vec2) -> f64) -> f64 {
        let mut total = 0.0;
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles()[t];
            let [a, b, c] = mesh.triangle_points(t);
            let area = mesh.triangle_area(t);
            for (l, w) in DEGREE2.iter() {
                let p = a * l[0] + b * l[1] + c * l[2];
                let v = values[tri[0]] * l[0] + values[tri[1]] * l[1] + values[tri[2]] * l[2];
                let d = v - other(p);
                total += w * area * d * d;
            }
        }
        total
    }

    pub fn relative_error(&self, mesh: &TriMesh, u_full: &[f64]) -> f64 {
        let locator = PointLocator::new(mesh);
        let eval = |p: Vec2| {
            let (t, l) = locator.locate_nearest(mesh, p);
            let tri = mesh.triangles()[t];
            u_full[tri[0]] * l[0] + u_full[tri[1]] * l[1] + u_full[tri[2]] * l[2]
        };
        let err = Self::integrate(self.truth_mesh, self.truth, eval).sqrt();
        if self.norm > 0.0 {
            err / self.norm
        } else {
            err
        }
    }
}

/// Nodal field sampled at points (nearest triangle outside the mesh).
pub fn sample_field(mesh: &TriMesh, u_full: &[f64], points: &[Vec2]) -> Vec<f64> {
    let locator = PointLocator::new(mesh);
    points
        .iter()
        .map(|&p| {
            let (t, l) = locator.locate_nearest(mesh, p);
            let tri = mesh.triangles()[t];
            u_full[tri[0]] * l[0] + u_full[tri[1]] * l[1] + u_full[tri[2]] * l[2]
        })
        .collect()
}

/// Reports of a run with `α` as configured and with `α = 1`.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub anisotropic: RunOutput,
    pub isotropic: RunOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub iteration: usize,
    pub n_triangles_anisotropic: usize,
    pub n_triangles_isotropic: usize,
    pub solver_seconds_anisotropic: f64,
    pub solver_seconds_isotropic: f64,
}

impl Comparison {
    pub fn rows(&self) -> Vec<ComparisonRow> {
        self.anisotropic
            .report
            .iterations
            .iter()
            .zip(&self.isotropic.report.iterations)
            .map(|(a, i)| ComparisonRow {
                iteration: a.iteration,
                n_triangles_anisotropic: a.n_triangles,
                n_triangles_isotropic: i.n_triangles,
                solver_seconds_anisotropic: a.times.solver,
                solver_seconds_isotropic: i.times.solver,
            })
            .collect()
    }
}

/// Runs both variants on the same data.
pub fn compare_anisotropy(config: &ExperimentConfig) -> std::result::Result<Comparison, RunFailure> {
    let problem = prepare_problem(config)?;
    let anisotropic = run_problem(&problem)?;
    let mut iso = problem.clone();
    iso.config.mesh.alpha = 1.0;
    let isotropic = run_problem(&iso)?;
    Ok(Comparison {
        anisotropic,
        isotropic,
    })
}
