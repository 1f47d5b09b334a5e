//! Oracles and random instances shared by the integration and acceptance
//! tests.

#![allow(dead_code)]

use abmesh::geom::Vec2;
use abmesh::mesh::{generate_initial_mesh, DomainShape, DomainSpec, TriMesh};
use abmesh::sparse::{DenseMatrix, LinOp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = gaussian(rng, rows * cols).into_iter().map(|v| v * scale).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn square(h: f64) -> TriMesh {
    generate_initial_mesh(&DomainSpec {
        shape: DomainShape::UnitSquare,
        h,
    })
    .unwrap()
}

pub fn disc(h: f64) -> TriMesh {
    generate_initial_mesh(&DomainSpec {
        shape: DomainShape::Disc,
        h,
    })
    .unwrap()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(f64::MIN_POSITIVE)
}

/// Minimizer of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// One-dimensional θ-energy `z²/(2θ) + (θ/ϑ)^r − (rβ − 3/2) log θ`, written
/// out independently of the library.
pub fn theta_energy(z: f64, vartheta: f64, r: f64, beta: f64, theta: f64) -> f64 {
    0.5 * z * z / theta + (theta / vartheta).powf(r) - (r * beta - 1.5) * theta.ln()
}

/// Golden-section minimizer of [`theta_energy`] in `log θ`.
///
/// The stationary point lies between `ϑ (η/r)^{1/r}` (the `z = 0` minimizer)
/// and `ϑ ((η + z²/(2θ₀))/r)^{1/r}`.
pub fn theta_oracle(z: f64, vartheta: f64, r: f64, beta: f64) -> f64 {
    let eta = r * beta - 1.5;
    let t0 = vartheta * (eta / r).powf(1.0 / r);
    let t1 = vartheta * ((eta + 0.5 * z * z / t0) / r).powf(1.0 / r);
    let (lo, hi) = (t0.ln() - 1e-3, t1.ln() + 1e-3);
    let s = golden_section(
        |s| theta_energy(z, vartheta, r, beta, s.exp()),
        lo,
        hi,
        1e-13 * (1.0 + hi.abs()),
    );
    s.exp()
}

/// Largest singular value squared of a dense matrix by power iteration.
pub fn spectral_norm2(a: &DenseMatrix) -> f64 {
    let mut x = vec![1.0; a.cols()];
    let mut lam = 0.0;
    for _ in 0..2000 {
        let y = a.mul_t(&a.mul(&x));
        let n = norm(&y);
        x = y.into_iter().map(|v| v / n).collect();
        if (n - lam).abs() <= 1e-15 * n {
            return n;
        }
        lam = n;
    }
    lam
}

/// Accelerated proximal gradient for `½‖A z − b‖² + Σ w_j |z_j|`.
pub fn weighted_l1(a: &DenseMatrix, b: &[f64], w: &[f64], iters: usize) -> Vec<f64> {
    let step = 1.0 / spectral_norm2(a);
    let n = a.cols();
    let mut z = vec![0.0; n];
    let mut y = z.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let r: Vec<f64> = a.mul(&y).iter().zip(b).map(|(p, q)| p - q).collect();
        let g = a.mul_t(&r);
        let next: Vec<f64> = (0..n)
            .map(|j| {
                let v = y[j] - step * g[j];
                v.signum() * (v.abs() - step * w[j]).max(0.0)
            })
            .collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = (0..n)
            .map(|j| next[j] + (t - 1.0) / t_next * (next[j] - z[j]))
            .collect();
        z = next;
        t = t_next;
    }
    z
}

/// A P1 field from a closure evaluated at the vertices.
pub fn nodal(mesh: &TriMesh, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
    mesh.vertices().iter().map(|&p| f(p)).collect()
}

/// Small sparse-recovery instance: `10 x 20` Gaussian operator, three active
/// components, identity incidence so that `z = u`.
pub struct SparseInstance {
    pub a: DenseMatrix,
    pub l: abmesh::sparse::CsrMatrix,
    pub b: Vec<f64>,
    pub vartheta_star: f64,
}

pub fn sparse_instance(seed: u64) -> SparseInstance {
    let mut g = rng(seed);
    let a = random_matrix(&mut g, 10, 20, 1.0);
    let mut z = vec![0.0; 20];
    z[3] = 3.0;
    z[11] = -2.5;
    z[17] = 2.0;
    let noise = gaussian(&mut g, 10);
    let b = a.mul(&z).iter().zip(&noise).map(|(p, e)| p + 0.1 * e).collect();
    SparseInstance {
        a,
        l: abmesh::sparse::CsrMatrix::identity(20),
        b,
        vartheta_star: 0.2,
    }
}

/// IAS options that run Phase I alone to its fixed point.
pub fn fixed_point_options(eta: f64, vartheta_star: f64) -> abmesh::ias::IasOptions {
    abmesh::ias::IasOptions {
        eta,
        vartheta_star,
        hybrid: false,
        sensitivity_scaling: false,
        threshold: 1e-13,
        max_outer: 20_000,
        z_solver: abmesh::ias::ZSolver::Exact {
            max_iter: 2000,
            tol: 1e-15,
        },
    }
}

/// Relative distance between the IAS Phase-I fixed point at `η = 1e-6` and
/// the weighted-ℓ1 minimizer with weights `√2/√ϑ_j`; also returns the
/// number of nonzeros of the ℓ1 solution and the largest compatibility
/// residual seen.
pub fn l1_limit_gap(seed: u64) -> (f64, usize, f64) {
    let inst = sparse_instance(seed);
    let opts = fixed_point_options(1e-6, inst.vartheta_star);
    let state = abmesh::ias::ias_solve(&inst.a, &inst.l, &inst.b, &opts, None).unwrap();
    let w: Vec<f64> = state.vartheta.iter().map(|v| 2f64.sqrt() / v.sqrt()).collect();
    let oracle = weighted_l1(&inst.a, &inst.b, &w, 200_000);
    let nnz = oracle.iter().filter(|v| v.abs() > 1e-8).count();
    (rel_diff(&state.z, &oracle), nnz, state.max_compatibility())
}

/// Runs Phase I from two random starting variances and returns the relative
/// differences of the final `z` and `θ`, and the largest compatibility
/// residual seen.
pub fn uniqueness_gap(seed: u64) -> (f64, f64, f64) {
    let inst = sparse_instance(seed);
    let opts = fixed_point_options(1e-3, inst.vartheta_star);
    let mut g = rng(seed ^ 0x5eed);
    let mut run = || {
        let t0: Vec<f64> = (0..20).map(|_| 10f64.powf(g.random_range(-3.0..1.0))).collect();
        abmesh::ias::ias_solve(&inst.a, &inst.l, &inst.b, &opts, Some(&t0)).unwrap()
    };
    let (s1, s2) = (run(), run());
    (
        rel_diff(&s1.z, &s2.z),
        rel_diff(&s1.theta, &s2.theta),
        s1.max_compatibility().max(s2.max_compatibility()),
    )
}
