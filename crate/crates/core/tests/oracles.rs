//! Cross-checks of the collar pipeline against independent constructions.

use cslab_core::cartan::{leaf_reports, levi_civita_forms, weitzenbock_shape, LeafJets};
use cslab_core::error::Result;
use cslab_core::foliation::{metric_at_infinity, propagate, BasePoint, Collar, CollarMetric, HyperbolicCollar, LeafNode, NormalHit};
use cslab_core::frames::{frame_at_infinity, gauge_between, rot_x, rot_z, tilted_frame, FrameField, FrameRule, Gauged, Twist};
use cslab_core::hypgeom::{FermiChart, HyperbolicPoint};
use cslab_core::numerics::{Axis, Differentiator, Grid2};
use cslab_core::surfaces::{fundamental_forms, node_forms, FlowedSurface, GraphSurface, NodeForms, Orientation, Parametrization, SurfaceChart, TubeSurface};
use nalgebra::{Matrix2, Matrix3, Vector3};
use proptest::prelude::*;

fn tube() -> TubeSurface {
    TubeSurface::new(1.0, FermiChart::new(2.0, 0.0).unwrap()).unwrap()
}

#[test]
fn propagated_forms_match_the_flowed_embedding() {
    let surfaces: [(&dyn Parametrization, Orientation); 2] = [
        (&tube(), Orientation::Positive),
        (&GraphSurface { f: |x: f64, y: f64| 1.0 + 0.3 * x * x + 0.1 * x * y + 0.2 * y * y, half_width: 0.4 }, Orientation::Negative),
    ];
    for (surface, orientation) in surfaces {
        let base = fundamental_forms(&SurfaceChart::sample(surface, 24, 24).unwrap(), orientation).unwrap();
        for r in [0.5, 1.0] {
            let leaf = propagate(&base, r).unwrap().geometry;
            let flowed = FlowedSurface { base: surface, orientation, r };
            let direct = fundamental_forms(&SurfaceChart::sample(&flowed, 24, 24).unwrap(), orientation).unwrap();
            for k in 0..leaf.grid.len() {
                let scale = leaf.first[k].amax();
                assert!((leaf.first[k] - direct.first[k]).amax() < 1e-6 * scale, "first form at r = {r}, node {k}");
                assert!((leaf.weingarten[k] - direct.weingarten[k]).amax() < 1e-6, "shape operator at r = {r}, node {k}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// At the critical point of `t = 1 + c|x|²`, the hit map pulls `I∞` back to `2δ`
    /// and has differential `(1 + c) I`.
    #[test]
    fn graph_critical_point(c in 0.05..1.0f64) {
        let f = move |x: f64, y: f64| 1.0 + c * (x * x + y * y);
        let hit = NormalHit { f };
        let forms = node_forms(&GraphSurface { f, half_width: 0.5 }, 0.0, 0.0, Orientation::Negative).unwrap();
        let pulled = hit.pulled_back_infinity_metric([0.0, 0.0], &forms).unwrap();
        prop_assert!((pulled - Matrix2::identity() * 2.0).amax() < 1e-6);
        prop_assert!((hit.differential([0.0, 0.0]) - Matrix2::identity() * (1.0 + c)).amax() < 1e-6);
    }
}

/// Leaf data of a surface flowed in Euclidean space: `A_r = I − rB`, `B_r = A_r⁻¹ B`.
struct EuclideanCollar;

impl CollarMetric for EuclideanCollar {
    fn leaf(&self, bp: &BasePoint, r: f64) -> Result<LeafNode> {
        let (i, b) = (bp.forms.first, bp.forms.weingarten);
        let a = Matrix2::identity() - b * r;
        Ok(LeafNode { first: a.transpose() * i * a, weingarten: a.try_inverse().unwrap() * b, a })
    }
}

/// The Cartesian frame `(e_x, e_y, e_z)` in collar components of a Euclidean collar.
struct Cartesian;

impl FrameRule for Cartesian {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        let f = &bp.forms;
        let a = Matrix2::identity() - f.weingarten * r;
        let xa = f.tangents[0] * a[(0, 0)] + f.tangents[1] * a[(1, 0)];
        let xb = f.tangents[0] * a[(0, 1)] + f.tangents[1] * a[(1, 1)];
        Ok(Matrix3::from_columns(&[xa, xb, f.normal]).try_inverse().unwrap())
    }
}

/// Monge patch `z = f(x, y)` with upward normal, classical Euclidean forms.
fn monge_forms(x: f64, y: f64) -> NodeForms {
    let (fx, fy) = (0.6 * x + 0.1 * y, 0.1 * x - 0.4 * y);
    let (fxx, fxy, fyy) = (0.6, 0.1, -0.4);
    let (xa, xb) = (Vector3::new(1.0, 0.0, fx), Vector3::new(0.0, 1.0, fy));
    let w = (1.0 + fx * fx + fy * fy).sqrt();
    let normal = Vector3::new(-fx, -fy, 1.0) / w;
    let first = Matrix2::new(xa.dot(&xa), xa.dot(&xb), xb.dot(&xa), xb.dot(&xb));
    let second = Matrix2::new(fxx, fxy, fxy, fyy) / w;
    // dN = −X · I⁻¹II, and the collar convention takes B = −dN in tangent coordinates.
    let weingarten = first.try_inverse().unwrap() * second;
    NodeForms { a: x, b: y, point: HyperbolicPoint { x1: x, x2: y, t: 1.0 }, tangents: [xa, xb], normal, first, second, weingarten }
}

#[test]
fn cartesian_frame_reproduces_the_monge_shape_operator() {
    let grid = Grid2::new(Axis::bounded(-0.5, 1.0, 20), Axis::bounded(-0.5, 1.0, 20)).unwrap();
    let base: Vec<BasePoint> = grid.all_coords().iter().map(|&(x, y)| BasePoint { forms: monge_forms(x, y) }).collect();
    let diff = Differentiator::new(&grid);
    for r in [0.0, 0.3] {
        let jets = LeafJets::compute(&base, &diff, &Cartesian, &EuclideanCollar, r).unwrap();
        for (j, bp) in jets.jets.iter().zip(&base) {
            let expected = EuclideanCollar.leaf(bp, r).unwrap().weingarten;
            let shape = weitzenbock_shape(j);
            assert!((shape.weingarten - expected).amax() < 1e-8, "r = {r}: {} vs {expected}", shape.weingarten);
        }
    }
}

#[test]
fn surface_data_depends_only_on_the_frame_along_the_surface() {
    let twist = Twist { n_s: 1.0, n_theta: 1.0, length: 2.0 };
    let collar = Collar::new(tube(), Orientation::Positive);
    let grid = Grid2::new(Axis::periodic(2.0, 24), Axis::periodic(std::f64::consts::TAU, 24)).unwrap();
    let base = collar.base_points(&grid).unwrap();
    let diff = Differentiator::new(&grid);
    let plain = tilted_frame(0.3, twist);
    let bent = Gauged { base: tilted_frame(0.3, twist), gauge: Box::new(|a: f64, _, r: f64| rot_x(0.7 * r * a.cos()) * rot_z(0.4 * r)) };
    let reports = |rule: &dyn FrameRule| {
        let jets = LeafJets::compute(&base, &diff, rule, &HyperbolicCollar, 0.0).unwrap();
        leaf_reports(&jets, &levi_civita_forms(&jets))
    };
    let (p, q) = (reports(&plain), reports(&bent));
    let mut tau_max: f64 = 0.0;
    for (x, y) in p.iter().zip(&q) {
        assert!((x.shape.weingarten - y.shape.weingarten).amax() < 1e-6);
        assert!((x.shape.mean - y.shape.mean).abs() < 1e-6);
        assert!((x.torsion.coframe - y.torsion.coframe).abs() < 1e-6);
        tau_max = tau_max.max(x.torsion.coframe.abs());
    }
    assert!(tau_max > 0.05, "tilted frames carry torsion");
}

#[test]
fn gauges_pass_unchanged_to_infinity() {
    let twist = Twist { n_s: 1.0, n_theta: 2.0, length: 2.0 };
    let surface = tube();
    let geom = fundamental_forms(&SurfaceChart::sample(&surface, 16, 16).unwrap(), Orientation::Positive).unwrap();
    let collar = Collar::new(surface, Orientation::Positive);
    let base = collar.base_points(&geom.grid).unwrap();
    let radii = [0.0, 0.5, 1.5];
    let sample = |rule: &dyn FrameRule| FrameField::sample(&base, &geom.grid, &radii, rule, &HyperbolicCollar).unwrap();
    let (a, b) = (sample(&*tilted_frame(0.2, twist)), sample(&*tilted_frame(-0.4, twist)));
    let inf = metric_at_infinity(&geom).unwrap();
    let (ai, bi) = (frame_at_infinity(&a, &inf).unwrap(), frame_at_infinity(&b, &inf).unwrap());
    assert!(ai.orthonormality_residual() < 1e-9 && bi.orthonormality_residual() < 1e-9);
    let (g, gi) = (gauge_between(&a, &b).unwrap(), gauge_between(&ai, &bi).unwrap());
    for (x, y) in g.g.iter().zip(&gi.g) {
        assert!((x - y).amax() < 1e-9);
    }
}
