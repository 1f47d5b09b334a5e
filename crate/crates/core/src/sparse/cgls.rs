use super::{dot, LinOp};
use crate::error::{check_len, Error, Result};
use serde::{Deserialize, Serialize};

/// Why CGLS returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CglsStop {
    /// `‖b − A w‖² < m` (discrepancy principle).
    Discrepancy,
    /// `‖b − A w‖² + ‖w‖²` increased; the previous iterate is returned.
    ObjectiveIncrease,
    MaxIter,
    /// Undamped mode only: the residual rose, which only happens through
    /// rounding once the iteration has stagnated; the previous iterate is
    /// returned.
    Stagnation,
    /// The normal-equation residual vanished (or fell below the tolerance in
    /// damped mode).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CglsOptions {
    /// Discrepancy threshold `m` on the squared residual; `None` disables it.
    pub discrepancy: Option<f64>,
    /// Enables the objective-increase rule.
    pub objective_rule: bool,
    pub max_iter: usize,
    /// Tikhonov damping `λ`: minimizes `‖b − A w‖² + λ²‖w‖²`. Zero gives
    /// plain CGLS.
    pub damping: f64,
    /// Relative tolerance on the normal-equation residual.
    pub tol: f64,
}

impl CglsOptions {
    /// Early-stopped CGLS with both stopping rules and threshold `m`. Also
    /// stops once the normal-equation residual is at roundoff level.
    pub fn regularizing(m: f64) -> Self {
        CglsOptions {
            discrepancy: Some(m),
            objective_rule: true,
            max_iter: 200,
            damping: 0.0,
            tol: 1e-12,
        }
    }

    /// Damped CGLS run to convergence, computing the exact minimizer of
    /// `‖b − A w‖² + ‖w‖²`.
    pub fn tikhonov(max_iter: usize, tol: f64) -> Self {
        CglsOptions {
            discrepancy: None,
            objective_rule: false,
            max_iter,
            damping: 1.0,
            tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CglsResult {
    pub w: Vec<f64>,
    /// Index of the returned iterate.
    pub iterations: usize,
    pub stop: CglsStop,
    /// `‖b − A w_k‖` for every computed iterate, starting with `k = 0`. An
    /// iterate rejected for stagnation is not recorded.
    pub residual_norms: Vec<f64>,
    /// `‖b − A w_k‖² + ‖w_k‖²` for every computed iterate.
    pub objectives: Vec<f64>,
}

/// CGLS for `min ‖b − A w‖` starting from `w₀ = 0`.
///
/// The discrepancy rule is checked before the objective rule at every
/// iterate; the objective rule returns the previous iterate.
pub fn cgls_solve<A: LinOp + ?Sized>(a: &A, b: &[f64], opts: &CglsOptions) -> Result<CglsResult> {
    check_len("cgls rhs", a.nrows(), b.len())?;
    if opts.max_iter == 0 {
        return Err(Error::InvalidInput("cgls max_iter must be at least 1".into()));
    }
    let n = a.ncols();
    let lam2 = opts.damping * opts.damping;
    let mut w = vec![0.0; n];
    let mut r = b.to_vec();
    let r2 = dot(&r, &r);
    let mut residual_norms = vec![r2.sqrt()];
    let mut objectives = vec![r2];
    let done = |w: Vec<f64>, it, stop, rn, ob| {
        Ok(CglsResult {
            w,
            iterations: it,
            stop,
            residual_norms: rn,
            objectives: ob,
        })
    };
    if let Some(m) = opts.discrepancy {
        if r2 < m {
            return done(w, 0, CglsStop::Discrepancy, residual_norms, objectives);
        }
    }
    let mut s = a.mul_t(&r);
    let mut gamma = dot(&s, &s);
    let gamma0 = gamma;
    if gamma == 0.0 {
        return done(w, 0, CglsStop::Exact, residual_norms, objectives);
    }
    let mut p = s.clone();
    let mut q = vec![0.0; a.nrows()];
    for k in 1..=opts.max_iter {
        a.apply(&p, &mut q);
        let denom = dot(&q, &q) + lam2 * dot(&p, &p);
        let alpha = gamma / denom;
        if !alpha.is_finite() {
            return Err(Error::Numerical {
                context: "cgls step length",
                iteration: k,
            });
        }
        let w_prev = w.clone();
        for (wi, pi) in w.iter_mut().zip(&p) {
            *wi += alpha * pi;
        }
        for (ri, qi) in r.iter_mut().zip(&q) {
            *ri -= alpha * qi;
        }
        let r2 = dot(&r, &r);
        let obj = r2 + dot(&w, &w);
        if !r2.is_finite() || !obj.is_finite() {
            return Err(Error::Numerical {
                context: "cgls residual",
                iteration: k,
            });
        }
        let prev_obj = *objectives.last().unwrap();
        if lam2 == 0.0 && r2.sqrt() > *residual_norms.last().unwrap() {
            return done(w_prev, k - 1, CglsStop::Stagnation, residual_norms, objectives);
        }
        residual_norms.push(r2.sqrt());
        objectives.push(obj);
        if let Some(m) = opts.discrepancy {
            if r2 < m {
                return done(w, k, CglsStop::Discrepancy, residual_norms, objectives);
            }
        }
        if opts.objective_rule && obj > prev_obj {
            return done(w_prev, k - 1, CglsStop::ObjectiveIncrease, residual_norms, objectives);
        }
        a.apply_t(&r, &mut s);
        if lam2 > 0.0 {
            for (si, wi) in s.iter_mut().zip(&w) {
                *si -= lam2 * wi;
            }
        }
        let gamma_new = dot(&s, &s);
        if gamma_new == 0.0 || gamma_new <= opts.tol * opts.tol * gamma0 {
            return done(w, k, CglsStop::Exact, residual_norms, objectives);
        }
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = si + beta * *pi;
        }
    }
    let it = opts.max_iter;
    done(w, it, CglsStop::MaxIter, residual_norms, objectives)
}
