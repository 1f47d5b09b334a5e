mod common;

use abmesh::ias::{
    gibbs_energy, ias_solve, match_phase_two, theta_update, HyperPrior, IasOptions, ReducedOperator,
};
use abmesh::pipeline::{build_forward, prepare_problem, ExperimentConfig};
use abmesh::sparse::{cgls_solve, CglsOptions, CglsStop, LinOp, ThinQr};
use abmesh::whitney::assemble_incidence;
use common::*;
use rand::Rng;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn theta_update_minimizes_energy(
        z in -50.0f64..50.0,
        log_v in -3.0f64..2.0,
        log_eta in -4.0f64..1.0,
        half in proptest::bool::ANY,
    ) {
        let r = if half { 0.5 } else { 1.0 };
        let v = 10f64.powf(log_v);
        let beta = (1.5 + 10f64.powf(log_eta)) / r;
        let prior = HyperPrior::new(r, beta, vec![v]);
        let t = theta_update(&[z], &prior).unwrap()[0];
        let oracle = theta_oracle(z, v, r, beta);
        prop_assert!(((t - oracle) / oracle).abs() < 1e-6, "{t} vs {oracle}");
    }

    #[test]
    fn cgls_residuals_never_increase(seed in 0u64..1000, rows in 5usize..40, cols in 5usize..40) {
        let mut g = rng(seed);
        let a = random_matrix(&mut g, rows, cols, 1.0);
        let b = gaussian(&mut g, rows).into_iter().map(|v| 5.0 * v).collect::<Vec<_>>();
        let m = rows as f64 * 0.5;
        let res = cgls_solve(&a, &b, &CglsOptions::regularizing(m)).unwrap();
        for w in res.residual_norms.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        if res.stop == CglsStop::Discrepancy {
            let r: Vec<f64> = a.mul(&res.w).iter().zip(&b).map(|(p, q)| q - p).collect();
            prop_assert!(norm(&r).powi(2) < m);
        }
    }
}

#[test]
fn ias_reaches_the_weighted_l1_minimizer() {
    let (gap, nnz, _) = l1_limit_gap(7);
    assert!(nnz >= 2, "degenerate instance");
    assert!(gap < 1e-3, "gap {gap}");
}

#[test]
fn phase_one_fixed_point_is_unique() {
    let (dz, dt, _) = uniqueness_gap(11);
    assert!(dz < 1e-4 && dt < 1e-4, "{dz} {dt}");
}

#[test]
fn matching_conditions_hold() {
    let v1 = 0.05;
    for eta in [1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
        let (b2, v2) = match_phase_two(eta, v1).unwrap();
        let first = v2 * (b2 - 3.0).powi(2);
        assert!(((first - v1 * eta) / (v1 * eta)).abs() < 1e-8);
        let ratio = (ln_gamma(b2 + 2.0) - ln_gamma(b2)).exp();
        let second = v2 * ratio;
        let target = v1 * (1.5 + eta);
        assert!(((second - target) / target).abs() < 1e-8, "eta {eta}");
    }
}

#[test]
fn theta_step_never_raises_gibbs_energy() {
    let inst = sparse_instance(3);
    let opts = IasOptions {
        vartheta_star: inst.vartheta_star,
        ..IasOptions::default()
    };
    let s = ias_solve(&inst.a, &inst.l, &inst.b, &opts, None).unwrap();
    for r in &s.history {
        if let (Some(before), Some(after)) = (r.energy_before_theta, r.energy_after_theta) {
            assert!(after <= before + 1e-12 * before.abs());
        }
    }
}

#[test]
fn z_updates_satisfy_compatibility_on_a_mesh() {
    let mut cfg = ExperimentConfig::tomography();
    cfg.mesh.truth_h = 0.02;
    cfg.mesh.h_init = 0.1;
    let problem = prepare_problem(&cfg).unwrap();
    let mesh = disc(0.1);
    let inc = assemble_incidence(&mesh);
    let s = problem.data.sigma;
    let a = build_forward(&cfg, &mesh).unwrap().scaled(s);
    let b: Vec<f64> = problem.data.noisy.iter().map(|v| v / s).collect();
    let state = ias_solve(&a, &inc.reduced, &b, &cfg.ias, None).unwrap();
    assert!(state.history.len() > 3);
    assert!(state.max_compatibility() <= 1e-8, "{}", state.max_compatibility());

    // Independent check: z lies in the range of L.
    let qr = ThinQr::new(&inc.reduced, &vec![1.0; inc.n_interior_edges()]).unwrap();
    let u = qr.least_squares(&state.z);
    let lu = inc.reduced.mul(&u);
    assert!(rel_diff(&lu, &state.z) <= 1e-8);
}

#[test]
fn gibbs_energy_matches_direct_formula() {
    let inst = sparse_instance(5);
    let qr = ThinQr::new(&inst.l, &[1.0; 20]).unwrap();
    let a1 = ReducedOperator { a: &inst.a, qr: &qr };
    let mut g = rng(9);
    let z = gaussian(&mut g, 20);
    let theta: Vec<f64> = (0..20).map(|_| g.random_range(0.1..2.0)).collect();
    let prior = HyperPrior::gamma(0.01, vec![0.3; 20]);
    let e = gibbs_energy(&z, &theta, &a1, &inst.b, &prior).unwrap();
    let r: Vec<f64> = inst.a.mul(&z).iter().zip(&inst.b).map(|(p, q)| q - p).collect();
    let mut direct = 0.5 * norm(&r).powi(2);
    for j in 0..20 {
        direct += 0.5 * z[j] * z[j] / theta[j] + theta[j] / 0.3 - 0.01 * (theta[j] / 0.3).ln();
    }
    assert!((e - direct).abs() < 1e-10 * direct.abs());
}
