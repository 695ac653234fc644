//! Equidistant foliation of a convex surface, the metric at infinity, and the
//! normal-hit map of a graph onto the boundary at infinity.
//!
//! With `A_r = cosh r · I − sinh r · B` the leaf at distance `r` has
//! `I_r = I(A_r ·, A_r ·)` and `B_r = −A_r⁻¹(sinh r · I − cosh r · B)`, both
//! expressed in the chart coordinates of the base surface.

use crate::error::{GeomError, Result};
use crate::hypgeom::{normal_flow, HyperbolicPoint, TangentVector3};
use crate::numerics::{d1, d2, Grid2};
use crate::surfaces::{node_forms, LeafGeometry, NodeForms, Orientation, Parametrization};
use nalgebra::{Matrix2, Matrix3};
use std::f64::consts::SQRT_2;

/// Leaf data at one node and one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafNode {
    pub first: Matrix2<f64>,
    pub weingarten: Matrix2<f64>,
    pub a: Matrix2<f64>,
}

/// `A_r` for a Weingarten map `b`.
pub fn a_matrix(b: &Matrix2<f64>, r: f64) -> Matrix2<f64> {
    Matrix2::identity() * r.cosh() - b * r.sinh()
}

pub fn propagate_node(first: &Matrix2<f64>, b: &Matrix2<f64>, r: f64) -> Result<LeafNode> {
    let a = a_matrix(b, r);
    let det = a.determinant();
    if !(det > 1e-12) {
        return Err(GeomError::Focal { r, det });
    }
    let inv = a.try_inverse().ok_or(GeomError::Focal { r, det })?;
    let weingarten = -inv * (Matrix2::identity() * r.sinh() - b * r.cosh());
    Ok(LeafNode { first: a.transpose() * first * a, weingarten, a })
}

/// Leaf geometry at distance `r` together with `A_r` per node.
#[derive(Clone, Debug)]
pub struct PropagatedLeaf {
    pub geometry: LeafGeometry,
    pub a: Vec<Matrix2<f64>>,
}

pub fn propagate(geom: &LeafGeometry, r: f64) -> Result<PropagatedLeaf> {
    let nodes: Result<Vec<LeafNode>> = geom.first.iter().zip(&geom.weingarten).map(|(i, b)| propagate_node(i, b, r)).collect();
    let nodes = nodes?;
    let geometry = LeafGeometry::from_forms(
        geom.grid.clone(),
        nodes.iter().map(|n| n.first).collect(),
        nodes.iter().map(|n| n.weingarten).collect(),
    )?;
    Ok(PropagatedLeaf { geometry, a: nodes.iter().map(|n| n.a).collect() })
}

/// Half of the distance to the nearest focal point on the concave side.
///
/// Principal curvatures `λ < −1` focus at `r = −artanh(1/|λ|)`; otherwise the
/// margin is capped at 1.
pub fn focal_margin(geom: &LeafGeometry) -> f64 {
    let mut bound = f64::INFINITY;
    for k in 0..geom.grid.len() {
        let lo = geom.principal_curvatures(k)[0];
        if lo < -1.0 {
            bound = bound.min((1.0 / -lo).atanh());
        }
    }
    (0.5 * bound).min(1.0)
}

/// Radii of a collar together with its inner margin.
#[derive(Clone, Debug, PartialEq)]
pub struct CollarSpec {
    pub epsilon: f64,
    pub radii: Vec<f64>,
}

impl CollarSpec {
    pub fn new(epsilon: f64, radii: Vec<f64>) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(GeomError::Domain("collar margin must be positive".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| *r <= -epsilon) {
            return Err(GeomError::Domain("collar radii must increase and exceed -epsilon".into()));
        }
        Ok(Self { epsilon, radii })
    }

    pub fn uniform(epsilon: f64, r_max: f64, n_r: usize) -> Result<Self> {
        let n = n_r.max(2);
        Self::new(epsilon, (0..n).map(|k| r_max * k as f64 / (n - 1) as f64).collect())
    }
}

/// Per-node data of the metric at infinity.
#[derive(Clone, Debug)]
pub struct InfinityGeometry {
    pub grid: Grid2,
    pub first: Vec<Matrix2<f64>>,
    /// `V = (I − B)/√2`.
    pub v: Vec<Matrix2<f64>>,
    pub da: Vec<f64>,
}

impl InfinityGeometry {
    /// Leaf metric of the warped model at height `r`.
    pub fn warped_leaf_metric(&self, k: usize, r: f64) -> Matrix2<f64> {
        self.first[k] * (2.0 * r).exp()
    }
}

pub fn infinity_metric_node(first: &Matrix2<f64>, b: &Matrix2<f64>) -> Result<(Matrix2<f64>, Matrix2<f64>)> {
    let m = Matrix2::identity() - b;
    if m.determinant().abs() < 1e-14 {
        return Err(GeomError::Degenerate("I - B is singular".into()));
    }
    Ok((m.transpose() * first * m * 0.5, m / SQRT_2))
}

pub fn metric_at_infinity(geom: &LeafGeometry) -> Result<InfinityGeometry> {
    let mut first = Vec::with_capacity(geom.grid.len());
    let mut v = Vec::with_capacity(geom.grid.len());
    for (i, b) in geom.first.iter().zip(&geom.weingarten) {
        let (f, vv) = infinity_metric_node(i, b)?;
        first.push(f);
        v.push(vv);
    }
    let da = first.iter().map(|m| m.determinant().sqrt()).collect();
    Ok(InfinityGeometry { grid: geom.grid.clone(), first, v, da })
}

/// Max-norm of `I_r^∞ − e^{2r} I^∞` over the leaf.
pub fn conformal_check(geom: &LeafGeometry, r: f64) -> Result<f64> {
    let base = metric_at_infinity(geom)?;
    let leaf = propagate(geom, r)?;
    let moved = metric_at_infinity(&leaf.geometry)?;
    let scale = (2.0 * r).exp();
    Ok(moved.first.iter().zip(&base.first).map(|(m, b)| (m - b * scale).amax() / scale).fold(0.0, f64::max))
}

/// Normal-hit map of the graph `t = f(x)`: the boundary point reached by the
/// downward normal geodesic from `(x, f(x))`.
pub struct NormalHit<F: Fn(f64, f64) -> f64> {
    pub f: F,
}

impl<F: Fn(f64, f64) -> f64> NormalHit<F> {
    const H: f64 = 1e-3;

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        [d1(|h| (self.f)(x[0] + h, x[1]), Self::H), d1(|h| (self.f)(x[0], x[1] + h), Self::H)]
    }

    pub fn hessian(&self, x: [f64; 2]) -> Matrix2<f64> {
        let h = 4.0 * Self::H;
        let xy = d1(|s| d1(|t| (self.f)(x[0] + s, x[1] + t), h), h);
        Matrix2::new(d2(|s| (self.f)(x[0] + s, x[1]), h), xy, xy, d2(|s| (self.f)(x[0], x[1] + s), h))
    }

    /// `x + f/(1 + √(|∇f|² + 1)) ∇f`.
    pub fn boundary_point(&self, x: [f64; 2]) -> [f64; 2] {
        let f = (self.f)(x[0], x[1]);
        let [f1, f2] = self.gradient(x);
        let c = f / (1.0 + (f1 * f1 + f2 * f2 + 1.0).sqrt());
        [x[0] + c * f1, x[1] + c * f2]
    }

    /// Jacobian of [`Self::boundary_point`].
    pub fn differential(&self, x: [f64; 2]) -> Matrix2<f64> {
        let h = 1e-2;
        let col = |i: usize| {
            d1(
                |s| {
                    let mut y = x;
                    y[i] += s;
                    let p = self.boundary_point(y);
                    nalgebra::Vector2::new(p[0], p[1])
                },
                h,
            )
        };
        Matrix2::from_columns(&[col(0), col(1)])
    }

    /// Pullback of the metric at infinity through the inverse of the normal-hit
    /// map, at `x`, using the surface data `forms` (normal pointing down).
    pub fn pulled_back_infinity_metric(&self, x: [f64; 2], forms: &NodeForms) -> Result<Matrix2<f64>> {
        let (inf, _) = infinity_metric_node(&forms.first, &forms.weingarten)?;
        let dw = self.differential(x).try_inverse().ok_or_else(|| GeomError::Degenerate("normal-hit map is singular".into()))?;
        Ok(dw.transpose() * inf * dw)
    }
}

/// Base surface data at one node, cached for repeated collar evaluations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasePoint {
    pub forms: NodeForms,
}

impl BasePoint {
    pub fn leaf(&self, r: f64) -> Result<LeafNode> {
        propagate_node(&self.forms.first, &self.forms.weingarten, r)
    }
}

/// Leaf metrics of a collar-shaped region `S × [−ε, ∞)` with coordinates `(a, b, r)`
/// and metric `I_r ⊕ dr²`.
pub trait CollarMetric: Sync + Send {
    fn leaf(&self, bp: &BasePoint, r: f64) -> Result<LeafNode>;
}

/// The hyperbolic metric in normal-exponential coordinates.
#[derive(Clone, Copy, Debug, Default)]
pub struct HyperbolicCollar;

impl CollarMetric for HyperbolicCollar {
    fn leaf(&self, bp: &BasePoint, r: f64) -> Result<LeafNode> {
        bp.leaf(r)
    }
}

/// The warped model `e^{2r} I∞ ⊕ dr²`; every leaf has `B = −I`.
#[derive(Clone, Copy, Debug, Default)]
pub struct WarpedModel;

impl CollarMetric for WarpedModel {
    fn leaf(&self, bp: &BasePoint, r: f64) -> Result<LeafNode> {
        let (inf, _) = infinity_metric_node(&bp.forms.first, &bp.forms.weingarten)?;
        Ok(LeafNode { first: inf * (2.0 * r).exp(), weingarten: -Matrix2::identity(), a: Matrix2::identity() * r.exp() })
    }
}

/// `I ⊕ 1`.
pub fn collar_metric(first: &Matrix2<f64>) -> Matrix3<f64> {
    let mut g = Matrix3::zeros();
    g.fixed_view_mut::<2, 2>(0, 0).copy_from(first);
    g[(2, 2)] = 1.0;
    g
}

/// Collar of a base surface swept out by its outward normal geodesics.
pub struct Collar<P: Parametrization> {
    pub surface: P,
    pub orientation: Orientation,
}

impl<P: Parametrization> Collar<P> {
    pub fn new(surface: P, orientation: Orientation) -> Self {
        Self { surface, orientation }
    }

    pub fn base_point(&self, a: f64, b: f64) -> Result<BasePoint> {
        Ok(BasePoint { forms: node_forms(&self.surface, a, b, self.orientation)? })
    }

    pub fn base_points(&self, grid: &Grid2) -> Result<Vec<BasePoint>> {
        use rayon::prelude::*;
        grid.all_coords().par_iter().map(|&(a, b)| self.base_point(a, b)).collect()
    }

    /// Position and coordinate vectors `(∂_a, ∂_b, ∂_r)` at radius `r` above `bp`,
    /// in upper half-space components.
    pub fn ambient_basis(&self, bp: &BasePoint, r: f64) -> Result<(HyperbolicPoint, Matrix3<f64>)> {
        let f = &bp.forms;
        let flow = normal_flow(&f.point, &TangentVector3::new(f.point, f.normal), r)?;
        let a = a_matrix(&f.weingarten, r);
        let xa = f.tangents[0] * a[(0, 0)] + f.tangents[1] * a[(1, 0)];
        let xb = f.tangents[0] * a[(0, 1)] + f.tangents[1] * a[(1, 1)];
        let basis = flow.transport * Matrix3::from_columns(&[xa, xb, f.normal]);
        Ok((flow.point, basis))
    }
}
