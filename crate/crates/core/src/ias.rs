//! Iterative alternating sequential (IAS) MAP estimation under
//! generalized-gamma hyperpriors, with the hybrid `r = 1` → `r = 1/2`
//! schedule.

use crate::error::{check_len, Error, Result};
use crate::sparse::{cgls_solve, CglsOptions, CglsStop, CsrMatrix, LinOp, ThinQr};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Generalized-gamma hyperprior `(r, β, ϑ)`.
///
/// The shape enters the energy only through `rβ − 3/2`, which is stored
/// directly so that small `η` keeps full precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperPrior {
    pub r: f64,
    shape: f64,
    pub vartheta: Vec<f64>,
}

impl HyperPrior {
    pub fn new(r: f64, beta: f64, vartheta: Vec<f64>) -> Self {
        HyperPrior {
            r,
            shape: r * beta - 1.5,
            vartheta,
        }
    }

    /// The gamma hyperprior `r = 1`, `β = 3/2 + η`.
    pub fn gamma(eta: f64, vartheta: Vec<f64>) -> Self {
        HyperPrior {
            r: 1.0,
            shape: eta,
            vartheta,
        }
    }

    pub fn beta(&self) -> f64 {
        (self.shape + 1.5) / self.r
    }

    /// `rβ − 3/2`.
    pub fn shape_exponent(&self) -> f64 {
        self.shape
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "hyperprior exponent r = {} is not supported (need r > 0)",
                self.r
            )));
        }
        if !(self.shape_exponent() > 0.0) {
            return Err(Error::InvalidInput(format!(
                "hyperprior needs rβ − 3/2 > 0, got {}",
                self.shape_exponent()
            )));
        }
        if let Some(j) = self.vartheta.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput(format!(
                "scale vartheta[{j}] = {} must be positive",
                self.vartheta[j]
            )));
        }
        Ok(())
    }

    /// The same shape parameters with new scales.
    pub fn with_scales(&self, vartheta: Vec<f64>) -> Self {
        HyperPrior {
            vartheta,
            ..self.clone()
        }
    }
}

/// Hyperprior part of the Gibbs energy:
/// `½ Σ z²/θ + Σ (θ/ϑ)^r − (rβ − 3/2) Σ log(θ/ϑ)`.
pub fn prior_energy(z: &[f64], theta: &[f64], prior: &HyperPrior) -> Result<f64> {
    check_len("theta", z.len(), theta.len())?;
    check_len("vartheta", z.len(), prior.vartheta.len())?;
    let eta = prior.shape_exponent();
    let mut e = 0.0;
    for ((&zj, &tj), &vj) in z.iter().zip(theta).zip(&prior.vartheta) {
        if !(tj > 0.0) {
            return Err(Error::InvalidInput(format!("theta must be positive, got {tj}")));
        }
        let ratio = tj / vj;
        e += 0.5 * zj * zj / tj + ratio.powf(prior.r) - eta * ratio.ln();
    }
    Ok(e)
}

/// Gibbs energy `½‖b − A₁ z‖² + prior_energy(z, θ)`.
pub fn gibbs_energy<A: LinOp + ?Sized>(
    z: &[f64],
    theta: &[f64],
    a1: &A,
    b: &[f64],
    prior: &HyperPrior,
) -> Result<f64> {
    check_len("z", a1.ncols(), z.len())?;
    check_len("b", a1.nrows(), b.len())?;
    let r = a1.mul(z);
    let fid: f64 = b.iter().zip(&r).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(0.5 * fid + prior_energy(z, theta, prior)?)
}

/// Componentwise minimizer of the θ-part of the Gibbs energy.
///
/// For `r = 1` the stationarity equation is a quadratic with root
/// `θ = (ηϑ + sqrt(η²ϑ² + 2ϑz²)) / 2`; other `r > 0` use a safeguarded
/// Newton iteration in `log θ`.
pub fn theta_update(z: &[f64], prior: &HyperPrior) -> Result<Vec<f64>> {
    check_len("vartheta", z.len(), prior.vartheta.len())?;
    prior.validate()?;
    let eta = prior.shape_exponent();
    let one = |(j, (&zj, &vj)): (usize, (&f64, &f64))| -> Result<f64> {
        if !zj.is_finite() {
            return Err(Error::InvalidInput(format!("z[{j}] is not finite")));
        }
        if prior.r == 1.0 {
            Ok(0.5 * (eta * vj + (eta * eta * vj * vj + 2.0 * vj * zj * zj).sqrt()))
        } else {
            theta_root(zj, vj, prior.r, eta).ok_or(Error::Numerical {
                context: "theta update bracket",
                iteration: j,
            })
        }
    };
    if z.len() >= 4096 {
        z.par_iter()
            .zip(prior.vartheta.par_iter())
            .enumerate()
            .map(one)
            .collect()
    } else {
        z.iter().zip(&prior.vartheta).enumerate().map(one).collect()
    }
}

/// Root of `g(θ) = r(θ/ϑ)^r − z²/(2θ) − η`, increasing in `θ`.
fn theta_root(z: f64, vartheta: f64, r: f64, eta: f64) -> Option<f64> {
    let half_z2 = 0.5 * z * z;
    let theta0 = vartheta * (eta / r).powf(1.0 / r);
    if half_z2 == 0.0 {
        return Some(theta0);
    }
    let ln_v = vartheta.ln();
    let g = |s: f64| -> (f64, f64, f64) {
        let t = (r * (s - ln_v)).exp();
        let q = half_z2 * (-s).exp();
        (r * t - q - eta, r * r * t + q, r * t + q + eta)
    };
    let mut lo = theta0.ln();
    let mut hi = lo + 1.0;
    let mut expansions = 0;
    while g(hi).0 <= 0.0 {
        hi += (hi - lo).max(1.0);
        expansions += 1;
        if expansions > 200 {
            return None;
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (gs, dg, scale) = g(s);
        if gs.abs() <= 1e-15 * scale {
            return Some(s.exp());
        }
        if gs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - gs / dg;
        s = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * (1.0 + s.abs()) {
            return Some(s.exp());
        }
    }
    Some(s.exp())
}

/// Phase-II hyperparameters `(β₂, ϑ₂*)` for `r₂ = 1/2` that keep the
/// `z = 0` minimizer and the expected hypervariance of Phase I.
pub fn match_phase_two(eta: f64, vartheta1_star: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidInput(format!("eta must be positive, got {eta}")));
    }
    if !(vartheta1_star > 0.0) {
        return Err(Error::InvalidInput(format!(
            "base scale must be positive, got {vartheta1_star}"
        )));
    }
    let mu = 1.0 + 1.5 / eta;
    let beta2 = (6.0 * mu + 1.0 + (48.0 * mu + 1.0).sqrt()) / (2.0 * (mu - 1.0));
    let vartheta2 = vartheta1_star * eta / (beta2 - 3.0).powi(2);
    Ok((beta2, vartheta2))
}

/// `‖θ_new − θ_old‖₂ / ‖θ_old‖₂`.
pub fn relative_theta_change(old: &[f64], new: &[f64]) -> Result<f64> {
    check_len("theta", old.len(), new.len())?;
    let den: f64 = old.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::InvalidInput("previous theta is zero".into()));
    }
    let num: f64 = old
        .iter()
        .zip(new)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(num / den)
}

/// `A R_θ⁻¹ Q_θᵀ`, mapping weighted edge variables to data.
pub struct ReducedOperator<'a, A: LinOp + ?Sized> {
    pub a: &'a A,
    pub qr: &'a ThinQr,
}

impl<A: LinOp + ?Sized> LinOp for ReducedOperator<'_, A> {
    fn nrows(&self) -> usize {
        self.a.nrows()
    }

    fn ncols(&self) -> usize {
        self.qr.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let u = self.qr.least_squares(x);
        self.a.apply(&u, y);
    }

    fn apply_t(&self, x: &[f64], y: &mut [f64]) {
        let v = self.a.mul_t(x);
        let u = self.qr.normal_solve(&v);
        y.copy_from_slice(&self.qr.l_theta_mul(&u));
    }
}

/// Squared column norms `‖A e_j‖²` of a linear map, computed row by row
/// through `Aᵀ`.
pub fn column_norms_squared<A: LinOp + ?Sized>(a: &A) -> Vec<f64> {
    const BLOCK: usize = 32;
    let (m, n) = (a.nrows(), a.ncols());
    let blocks: Vec<Vec<f64>> = (0..m.div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let mut acc = vec![0.0; n];
            let mut e = vec![0.0; m];
            let mut col = vec![0.0; n];
            for i in blk * BLOCK..((blk + 1) * BLOCK).min(m) {
                e[i] = 1.0;
                a.apply_t(&e, &mut col);
                e[i] = 0.0;
                for (s, c) in acc.iter_mut().zip(&col) {
                    *s += c * c;
                }
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; n];
    for b in blocks {
        for (o, v) in out.iter_mut().zip(b) {
            *o += v;
        }
    }
    out
}

/// `ϑ_j = ϑ* / ‖A₁ e_j‖²`, so that every component explains the data at the
/// same signal-to-noise ratio. Fails if the data are blind to some component.
pub fn sensitivity_scaling<A: LinOp + ?Sized>(a1: &A, vartheta_star: f64) -> Result<Vec<f64>> {
    let norms = column_norms_squared(a1);
    if let Some(j) = norms.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "column {j} of the reduced operator vanishes; data are blind to that component"
        )));
    }
    Ok(norms.into_iter().map(|v| vartheta_star / v).collect())
}

/// How the z-update solves its least-squares problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ZSolver {
    /// CGLS with the discrepancy and objective-increase stopping rules.
    Regularizing { max_iter: usize },
    /// Damped CGLS to a tolerance: the exact minimizer of the z-energy.
    Exact { max_iter: usize, tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IasOptions {
    /// `η = β₁ − 3/2` of the Phase I gamma hyperprior.
    pub eta: f64,
    /// Base scale `ϑ₁*`.
    pub vartheta_star: f64,
    /// Run the `r = 1/2` Phase II after Phase I.
    pub hybrid: bool,
    /// Scale `ϑ` by squared column norms of the reduced operator.
    pub sensitivity_scaling: bool,
    /// Stop a phase when the relative θ change drops below this.
    pub threshold: f64,
    /// Maximum IAS iterations per phase.
    pub max_outer: usize,
    pub z_solver: ZSolver,
}

impl Default for IasOptions {
    fn default() -> Self {
        IasOptions {
            eta: 1e-3,
            vartheta_star: 0.05,
            hybrid: true,
            sensitivity_scaling: false,
            threshold: 0.05,
            max_outer: 15,
            z_solver: ZSolver::Regularizing { max_iter: 200 },
        }
    }
}

impl IasOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.vartheta_star > 0.0) {
            return Err(Error::InvalidInput("eta and vartheta_star must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidInput("threshold must lie in (0, 1)".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::InvalidInput("max_outer must be at least 1".into()));
        }
        Ok(())
    }
}

/// One IAS step: a z-update followed (except for the initial solve) by the
/// θ-update that preceded it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IasRecord {
    pub phase: u8,
    pub iteration: usize,
    pub cgls_iterations: usize,
    pub cgls_stop: CglsStop,
    /// Whether the CGLS residual history was non-increasing.
    pub cgls_monotone: bool,
    /// Gibbs energy after the θ-update of this step (before the z-update).
    pub energy_after_theta: Option<f64>,
    /// Gibbs energy before the θ-update of this step.
    pub energy_before_theta: Option<f64>,
    /// Gibbs energy after the z-update.
    pub energy: f64,
    pub theta_change: Option<f64>,
    /// `‖Q₂ᵀ z‖ / ‖z‖` after the z-update (zero when `z = 0`).
    pub compatibility: f64,
}

/// Final IAS state with the full history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IasState {
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
    /// Phase I scales.
    pub vartheta: Vec<f64>,
    /// `(β₂, ϑ₂*)` when Phase II ran.
    pub phase_two: Option<(f64, f64)>,
    pub history: Vec<IasRecord>,
}

impl IasState {
    /// CGLS iteration counts of every z-update, in order.
    pub fn cgls_counts(&self) -> Vec<usize> {
        self.history.iter().map(|r| r.cgls_iterations).collect()
    }

    pub fn max_compatibility(&self) -> f64 {
        self.history
            .iter()
            .fold(0.0, |m, r| m.max(r.compatibility))
    }
}

struct ZStep {
    z: Vec<f64>,
    u: Vec<f64>,
    iterations: usize,
    stop: CglsStop,
    monotone: bool,
    fidelity: f64,
    compatibility: f64,
}

struct Solver<'a, A: LinOp + ?Sized> {
    a: &'a A,
    b: &'a [f64],
    qr1: ThinQr,
    z_solver: ZSolver,
}

impl<A: LinOp + ?Sized> Solver<'_, A> {
    fn z_update(&self, theta: &[f64]) -> Result<ZStep> {
        let qr = self.qr1.reweighted(theta)?;
        let op = ReducedOperator { a: self.a, qr: &qr };
        let opts = match self.z_solver {
            ZSolver::Regularizing { max_iter } => CglsOptions {
                max_iter,
                ..CglsOptions::regularizing(self.b.len() as f64)
            },
            ZSolver::Exact { max_iter, tol } => CglsOptions::tikhonov(max_iter, tol),
        };
        let res = cgls_solve(&op, self.b, &opts)?;
        let monotone = res.residual_norms.windows(2).all(|w| w[1] <= w[0]);
        let z: Vec<f64> = res
            .w
            .iter()
            .zip(theta)
            .map(|(w, t)| w * t.sqrt())
            .collect();
        let u = self.qr1.least_squares(&z);
        let lu = self.qr1.l_theta_mul(&u);
        let zn = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        let off = z
            .iter()
            .zip(&lu)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let compatibility = if zn > 0.0 { off / zn } else { 0.0 };
        let pred = self.a.mul(&u);
        let fidelity = 0.5
            * self
                .b
                .iter()
                .zip(&pred)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>();
        Ok(ZStep {
            z,
            u,
            iterations: res.iterations,
            stop: res.stop,
            monotone,
            fidelity,
            compatibility,
        })
    }
}

/// Hybrid IAS on the whitened system `b = A u + e`, `e ~ N(0, I)`, with the
/// sparsity prior placed on `z = L u`.
///
/// `theta_init` overrides the default start `θ⁰ = ϑ`.
pub fn ias_solve<A: LinOp + ?Sized>(
    a: &A,
    l: &CsrMatrix,
    b: &[f64],
    opts: &IasOptions,
    theta_init: Option<&[f64]>,
) -> Result<IasState> {
    opts.validate()?;
    check_len("data", a.nrows(), b.len())?;
    check_len("operator columns", l.ncols(), a.ncols())?;
    let n_e = l.nrows();
    let qr1 = ThinQr::new(l, &vec![1.0; n_e])?;
    let solver = Solver {
        a,
        b,
        qr1,
        z_solver: opts.z_solver,
    };

    let scales = if opts.sensitivity_scaling {
        let a1 = ReducedOperator {
            a,
            qr: &solver.qr1,
        };
        sensitivity_scaling(&a1, 1.0)?
    } else {
        vec![1.0; n_e]
    };
    let vartheta: Vec<f64> = scales.iter().map(|s| s * opts.vartheta_star).collect();
    let prior1 = HyperPrior::gamma(opts.eta, vartheta.clone());
    prior1.validate()?;

    let mut theta = match theta_init {
        Some(t) => {
            check_len("theta_init", n_e, t.len())?;
            t.to_vec()
        }
        None => vartheta.clone(),
    };

    let mut history = Vec::new();
    let step = solver.z_update(&theta)?;
    let mut energy = step.fidelity + prior_energy(&step.z, &theta, &prior1)?;
    history.push(IasRecord {
        phase: 1,
        iteration: 0,
        cgls_iterations: step.iterations,
        cgls_stop: step.stop,
        cgls_monotone: step.monotone,
        energy_before_theta: None,
        energy_after_theta: None,
        energy,
        theta_change: None,
        compatibility: step.compatibility,
    });
    let mut z = step.z;
    let mut u = step.u;
    let mut fidelity = step.fidelity;

    let mut phases = vec![(1u8, prior1)];
    let mut phase_two = None;
    if opts.hybrid {
        let (beta2, v2) = match_phase_two(opts.eta, opts.vartheta_star)?;
        phase_two = Some((beta2, v2));
        phases.push((
            2,
            HyperPrior::new(0.5, beta2, scales.iter().map(|s| s * v2).collect()),
        ));
    }

    for (phase, prior) in &phases {
        let before = fidelity + prior_energy(&z, &theta, prior)?;
        let mut energy_before = before;
        for it in 1..=opts.max_outer {
            let new_theta = theta_update(&z, prior)?;
            let change = relative_theta_change(&theta, &new_theta)?;
            theta = new_theta;
            let after_theta = fidelity + prior_energy(&z, &theta, prior)?;
            let step = solver.z_update(&theta)?;
            energy = step.fidelity + prior_energy(&step.z, &theta, prior)?;
            history.push(IasRecord {
                phase: *phase,
                iteration: it,
                cgls_iterations: step.iterations,
                cgls_stop: step.stop,
                cgls_monotone: step.monotone,
                energy_before_theta: Some(energy_before),
                energy_after_theta: Some(after_theta),
                energy,
                theta_change: Some(change),
                compatibility: step.compatibility,
            });
            log::debug!(
                "IAS phase {phase} iteration {it}: cgls {} ({:?}), energy {energy:.6e}, dtheta {change:.3e}",
                step.iterations,
                step.stop
            );
            z = step.z;
            u = step.u;
            fidelity = step.fidelity;
            energy_before = energy;
            if change < opts.threshold {
                break;
            }
        }
    }

    Ok(IasState {
        z,
        theta,
        u,
        vartheta,
        phase_two,
        history,
    })
}
