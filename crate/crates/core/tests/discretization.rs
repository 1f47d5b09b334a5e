mod common;

use abmesh::clement::clement_gradient;
use abmesh::geom::{Sym2, Vec2};
use abmesh::metric::{
    build_metric, element_metric, intersect_metrics, steiner_polar, MetricField, MetricSampler,
};
use abmesh::whitney::{
    assemble_incidence, gradient_coefficients, incidence_qr, nodal_from_coefficients,
    whitney_evaluate,
};
use abmesh::sparse::LinOp;
use common::*;
use proptest::prelude::*;

fn is_psd(s: &Sym2, tol: f64) -> bool {
    let e = s.eigen();
    e.small >= -tol * e.large.abs().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn whitney_reproduces_linear_gradients(
        a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0,
        h in 0.08f64..0.3, s in 0.0f64..1.0, t in 0.0f64..1.0,
    ) {
        let mesh = disc(h);
        let u = nodal(&mesh, |p| a * p.x + b * p.y + c);
        let inc = assemble_incidence(&mesh);
        let z = inc.full.mul(&u);
        let tri = ((s * mesh.n_triangles() as f64) as usize).min(mesh.n_triangles() - 1);
        let [p0, p1, p2] = mesh.triangle_points(tri);
        let (l1, l2) = (t * (1.0 - s), s * (1.0 - t));
        let p = p0 * (1.0 - l1 - l2) + p1 * l1 + p2 * l2;
        let g = whitney_evaluate(&mesh, &z, tri, p).unwrap();
        prop_assert!((g.x - a).abs() < 1e-10 && (g.y - b).abs() < 1e-10);
    }

    #[test]
    fn clement_is_linear(seed in 0u64..500, k in -3.0f64..3.0) {
        let mesh = square(0.2);
        let mut g = rng(seed);
        let z1 = gaussian(&mut g, mesh.n_edges());
        let z2 = gaussian(&mut g, mesh.n_edges());
        let zc: Vec<f64> = z1.iter().zip(&z2).map(|(x, y)| x + k * y).collect();
        let (g1, g2, gc) = (
            clement_gradient(&mesh, &z1).unwrap(),
            clement_gradient(&mesh, &z2).unwrap(),
            clement_gradient(&mesh, &zc).unwrap(),
        );
        for i in 0..mesh.n_vertices() {
            let d = gc[i] - (g1[i] + g2[i] * k);
            prop_assert!(d.norm() < 1e-12 * (1.0 + gc[i].norm()));
        }
    }

    #[test]
    fn intersection_of_diagonal_metrics(
        a1 in 0.1f64..100.0, a2 in 0.1f64..100.0, b1 in 0.1f64..100.0, b2 in 0.1f64..100.0,
        angle in 0.0f64..3.2,
    ) {
        // Rotating both tensors commutes with the intersection.
        let e = Vec2::new(angle.cos(), angle.sin());
        let a = Sym2::from_eigen(a1, a2, e);
        let b = Sym2::from_eigen(b1, b2, e);
        let m = intersect_metrics(&a, &b);
        let expect = Sym2::from_eigen(a1.max(b1), a2.max(b2), e);
        prop_assert!((m - expect).max_abs() < 1e-9 * expect.max_abs());
    }

    #[test]
    fn intersection_dominates_both(
        a1 in 0.1f64..100.0, a2 in 0.1f64..100.0, b1 in 0.1f64..100.0, b2 in 0.1f64..100.0,
        ta in 0.0f64..3.2, tb in 0.0f64..3.2,
    ) {
        let a = Sym2::from_eigen(a1, a2, Vec2::new(ta.cos(), ta.sin()));
        let b = Sym2::from_eigen(b1, b2, Vec2::new(tb.cos(), tb.sin()));
        let m = intersect_metrics(&a, &b);
        prop_assert!(is_psd(&(m - a), 1e-9) && is_psd(&(m - b), 1e-9));
    }
}

#[test]
fn whitney_gradient_recovers_nodal_values() {
    let mesh = disc(0.1);
    let inc = assemble_incidence(&mesh);
    let interior = mesh.interior_vertices();
    let u: Vec<f64> = interior
        .iter()
        .map(|&v| {
            let p = mesh.vertex(v);
            (3.0 * p.x).sin() * p.y
        })
        .collect();
    let z = gradient_coefficients(&inc.reduced, &u).unwrap();
    let qr = incidence_qr(&inc).unwrap();
    let (back, res) = nodal_from_coefficients(&qr, &z).unwrap();
    assert!(res < 1e-10);
    assert!(rel_diff(&back, &u) < 1e-10);
}

#[test]
fn clement_preserves_constant_gradients() {
    for mesh in [square(0.1), disc(0.12)] {
        let u = nodal(&mesh, |p| 2.5 * p.x - 1.5 * p.y + 0.3);
        let inc = assemble_incidence(&mesh);
        let z = inc.full.mul(&u);
        for g in clement_gradient(&mesh, &z).unwrap() {
            assert!((g.x - 2.5).abs() < 1e-12 && (g.y + 1.5).abs() < 1e-12);
        }
    }
}

#[test]
fn metric_calibration_identities() {
    let mesh = disc(0.1);
    let grad: Vec<Vec2> = mesh
        .vertices()
        .iter()
        .map(|p| Vec2::new(4.0 * p.x, 0.5 * p.y * p.y))
        .collect();
    let (h_min, h_max, alpha) = (0.005, 0.2, 10.0);
    let f = build_metric(&mesh, &grad, h_min, h_max, alpha).unwrap();
    let cal = f.calibration.unwrap();
    let m = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
    assert!((cal.max_gradient - m).abs() < 1e-14);
    assert!((cal.c * h_min * h_min * m * m - 1.0).abs() < 1e-12);
    assert!((cal.delta * h_max - (alpha / cal.c).sqrt()).abs() < 1e-12);

    let mut seen_aniso = false;
    for (g, t) in grad.iter().zip(f.tensors()) {
        let e = t.eigen();
        if g.norm() > cal.delta {
            seen_aniso = true;
            let n = g.norm();
            assert!((e.large - cal.c * n * n).abs() < 1e-9 * e.large);
            assert!((e.large / e.small - alpha).abs() < 1e-8 * alpha);
            let align = (e.major.dot(*g) / n).abs();
            assert!((align - 1.0).abs() < 1e-10);
        } else {
            assert!((*t - Sym2::scalar(cal.delta)).max_abs() < 1e-14);
        }
    }
    assert!(seen_aniso);
    // The steepest vertex asks for h_min along the gradient.
    let top = f.tensors().iter().map(|t| t.eigen().large).fold(0.0, f64::max);
    assert!((top * h_min * h_min - 1.0).abs() < 1e-10);
}

#[test]
fn gradation_only_refines() {
    let mesh = disc(0.1);
    let tensors: Vec<Sym2> = mesh
        .vertices()
        .iter()
        .map(|p| {
            if (p.norm() - 0.5).abs() < 0.05 {
                Sym2::from_eigen(1e4, 25.0, *p * (1.0 / p.norm()))
            } else {
                Sym2::scalar(25.0)
            }
        })
        .collect();
    let field = MetricField::new(mesh.clone(), tensors).unwrap();
    let graded = field.graded(1.8);
    let mut raised = 0;
    for (a, b) in field.tensors().iter().zip(graded.tensors()) {
        assert!(is_psd(&(*b - *a), 1e-9));
        if (*b - *a).max_abs() > 1e-6 {
            raised += 1;
        }
    }
    assert!(raised > 0);
    // A ratio of one leaves the field untouched.
    assert_eq!(field.graded(1.0).tensors(), field.tensors());
    // Interpolation reproduces vertex tensors.
    for (v, t) in mesh.vertices().iter().zip(graded.tensors()) {
        assert!((graded.at(*v) - *t).max_abs() < 1e-8 * t.max_abs());
    }
}

#[test]
fn steiner_metric_gives_unit_edges() {
    let mut g = rng(4);
    for _ in 0..200 {
        let p = gaussian(&mut g, 6);
        let (a, b, c) = (
            Vec2::new(p[0], p[1]),
            Vec2::new(p[2], p[3]),
            Vec2::new(p[4], p[5]),
        );
        let (a, b, c) = if (b - a).cross(c - a) > 0.0 { (a, b, c) } else { (a, c, b) };
        if (b - a).cross(c - a).abs() < 1e-3 {
            continue;
        }
        let s = steiner_polar(a, b, c).unwrap();
        let m = element_metric(&s);
        let lens = [m.quad(b - a), m.quad(c - b), m.quad(a - c)];
        // Every triangle is equilateral with unit sides in its own metric.
        for l in lens {
            assert!((l - 1.0).abs() < 1e-9, "{lens:?}");
        }
        // F = W P with W orthogonal.
        let w = s.w;
        let wtw = w.transpose().mul_mat(&w);
        assert!(wtw.max_abs_diff(&abmesh::geom::Mat2::IDENTITY) < 1e-10);
    }
}

#[test]
fn calibrated_metric_gives_unit_segments() {
    let mesh = disc(0.2);
    let (h_min, h_max, alpha) = (0.004, 0.25, 12.0f64);
    let m = 7.0;
    let delta = alpha.sqrt() * h_min * m / h_max;
    let mut grad = vec![Vec2::new(0.0, 0.0); mesh.n_vertices()];
    let e = Vec2::new(0.6, 0.8);
    grad[0] = e * m;
    grad[1] = e * (delta * (1.0 + 1e-13));
    let f = build_metric(&mesh, &grad, h_min, h_max, alpha).unwrap();
    assert!((f.calibration.unwrap().delta - delta).abs() < 1e-15 * delta.max(1.0));
    let parallel = f.tensors()[0].quad(e * h_min).sqrt();
    let perpendicular = f.tensors()[1].quad(e.perp() * h_max).sqrt();
    assert!((parallel - 1.0).abs() < 1e-10, "{parallel}");
    assert!((perpendicular - 1.0).abs() < 1e-10, "{perpendicular}");
}
