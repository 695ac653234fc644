//! Randomized invariants of the isometry, foliation and extrapolation layers.

use cslab_core::foliation::{a_matrix, infinity_metric_node, propagate_node};
use cslab_core::hypgeom::{apply_isometry, distance, frame_to_isometry, HyperbolicPoint, IsometryMatrix, OrthonormalFrame3};
use cslab_core::renorm::richardson;
use nalgebra::{Matrix2, Matrix3, Rotation3, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = HyperbolicPoint> {
    (-3.0..3.0f64, -3.0..3.0f64, 0.1..4.0f64).prop_map(|(x1, x2, t)| HyperbolicPoint::new(x1, x2, t).unwrap())
}

fn isometry() -> impl Strategy<Value = IsometryMatrix> {
    prop::array::uniform8(-2.0..2.0f64)
        .prop_filter("non-degenerate", |v| {
            let m = Matrix2::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]), Complex64::new(v[6], v[7]));
            (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).norm() > 0.1
        })
        .prop_map(|v| {
            IsometryMatrix::new(Matrix2::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), Complex64::new(v[4], v[5]), Complex64::new(v[6], v[7]))).unwrap()
        })
}

/// Positive-definite `I` and `I`-self-adjoint `B` with eigenvalues in `[-2.5, -0.2]`.
fn convex_node() -> impl Strategy<Value = (Matrix2<f64>, Matrix2<f64>)> {
    (0.5..2.0f64, -0.8..0.8f64, 0.5..2.0f64, 0.0..3.2f64, -2.5..-0.2f64, -2.5..-0.2f64).prop_map(|(l11, l21, l22, t, k1, k2)| {
        let l = Matrix2::new(l11, 0.0, l21, l22);
        let (s, c) = t.sin_cos();
        let q = Matrix2::new(c, -s, s, c);
        let lt = l.transpose();
        (l * lt, lt.try_inverse().unwrap() * q * Matrix2::new(k1, 0.0, 0.0, k2) * q.transpose() * lt)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn isometries_preserve_distance(g in isometry(), p in point(), q in point()) {
        let (gp, gq) = (apply_isometry(&g, &p).unwrap(), apply_isometry(&g, &q).unwrap());
        // cosh d = 1 + |p − q|² / (2 t_p t_q).
        let oracle = |p: &HyperbolicPoint, q: &HyperbolicPoint| {
            let d2 = (p.x1 - q.x1).powi(2) + (p.x2 - q.x2).powi(2) + (p.t - q.t).powi(2);
            (1.0 + d2 / (2.0 * p.t * q.t)).acosh()
        };
        let d = oracle(&p, &q);
        prop_assert!((oracle(&gp, &gq) - d).abs() < 1e-8 * (1.0 + d));
        prop_assert!((distance(&p, &q) - d).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn composition_is_matrix_product(g in isometry(), h in isometry(), p in point()) {
        let lhs = apply_isometry(&g.compose(&h), &p).unwrap();
        let rhs = apply_isometry(&g, &apply_isometry(&h, &p).unwrap()).unwrap();
        prop_assert!((lhs.coords() - rhs.coords()).norm() < 1e-8 * (1.0 + rhs.coords().norm()));
        let back = apply_isometry(&g.inverse(), &apply_isometry(&g, &p).unwrap()).unwrap();
        prop_assert!((back.coords() - p.coords()).norm() < 1e-8 * (1.0 + p.coords().norm()));
    }

    /// Includes rotations by angles up to π, where axis extraction is fragile.
    #[test]
    fn frame_lift_reproduces_the_frame(p in point(), axis in prop::array::uniform3(-1.0..1.0f64), angle in 0.0..=std::f64::consts::PI) {
        let axis = Vector3::from(axis);
        prop_assume!(axis.norm() > 0.1);
        let rot = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner();
        let frame = OrthonormalFrame3::new(p, rot * p.t).unwrap();
        let g = frame_to_isometry(&frame).unwrap();
        let j = HyperbolicPoint::new(0.0, 0.0, 1.0).unwrap();
        let image = apply_isometry(&g, &j).unwrap();
        prop_assert!((image.coords() - p.coords()).norm() < 1e-9 * (1.0 + p.coords().norm()));
        let pushed: Matrix3<f64> = g.differential(&j);
        prop_assert!((pushed - frame.e).amax() < 1e-8 * p.t.max(1.0));
    }

    #[test]
    fn shape_powers_times_inverse_a_are_self_adjoint((first, b) in convex_node(), r in 0.0..3.0f64) {
        let a_inv = a_matrix(&b, r).try_inverse().unwrap();
        let mut bn = Matrix2::identity();
        for _ in 0..4 {
            let m = first * bn * a_inv;
            prop_assert!((m - m.transpose()).amax() < 1e-10 * m.amax().max(1.0));
            bn *= b;
        }
    }

    #[test]
    fn propagation_is_a_semigroup((first, b) in convex_node(), r1 in 0.0..2.0f64, r2 in 0.0..2.0f64) {
        let step = propagate_node(&first, &b, r1).unwrap();
        let two = propagate_node(&step.first, &step.weingarten, r2).unwrap();
        let one = propagate_node(&first, &b, r1 + r2).unwrap();
        prop_assert!((two.first - one.first).amax() < 1e-9 * one.first.amax());
        prop_assert!((two.weingarten - one.weingarten).amax() < 1e-9);
    }

    #[test]
    fn infinity_metric_scales_by_e_2r((first, b) in convex_node(), r in 0.0..3.0f64) {
        let base = infinity_metric_node(&first, &b).unwrap().0;
        let leaf = propagate_node(&first, &b, r).unwrap();
        let moved = infinity_metric_node(&leaf.first, &leaf.weingarten).unwrap().0;
        let scale = (2.0 * r).exp();
        prop_assert!((moved / scale - base).amax() < 1e-10 * base.amax());
    }

    #[test]
    fn richardson_recovers_model_limits(f in -5.0..5.0f64, c1 in -5.0..5.0f64, c2 in -5.0..5.0f64, im in -5.0..5.0f64) {
        let rho: Vec<f64> = (0..=16).map(|k| 0.25 * k as f64).collect();
        let vals: Vec<Complex64> = rho.iter().map(|r| Complex64::new(f + c1 * (-r).exp() + c2 * (-2.0 * r).exp(), im)).collect();
        let lim = richardson(&rho, &vals).unwrap();
        prop_assert!((lim - Complex64::new(f, im)).norm() < 1e-10);
    }
}
