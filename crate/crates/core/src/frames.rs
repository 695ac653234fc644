//! Orthonormal frame fields on collars.
//!
//! A frame is a 3×3 matrix whose columns are `E_1, E_2, E_3` in collar
//! components `(∂_a, ∂_b, ∂_r)`. Orthonormality is with respect to `I_r ⊕ dr²`
//! for whichever [`CollarMetric`] the frame lives on.

use crate::error::{GeomError, Result};
use crate::foliation::{collar_metric, BasePoint, CollarMetric, InfinityGeometry, LeafNode};
use crate::numerics::Grid2;
use nalgebra::{Matrix2, Matrix3};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

/// Rotation about the first axis; mixes `E_2` and `E_3`.
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Rotation about the third axis; mixes `E_1` and `E_2`.
pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Block-diagonal embedding of a tangential map.
pub fn tangential(m: &Matrix2<f64>) -> Matrix3<f64> {
    let mut out = Matrix3::identity();
    out.fixed_view_mut::<2, 2>(0, 0).copy_from(m);
    out
}

/// `max |EᵀGE − 1|`.
pub fn orthonormality_residual(frame: &Matrix3<f64>, first: &Matrix2<f64>) -> f64 {
    (frame.transpose() * collar_metric(first) * frame - Matrix3::identity()).amax()
}

/// A frame field given pointwise over a collar.
pub trait FrameRule: Sync + Send {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>>;
}

impl<T: FrameRule + ?Sized> FrameRule for Box<T> {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        (**self).frame(bp, r)
    }
}

impl<T: FrameRule + ?Sized> FrameRule for &T {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        (**self).frame(bp, r)
    }
}

/// Leaf-adapted frame: `E_2 ∥ ∂_b`, `E_1 ⟂ E_2` tangent with `(E_1, E_2, ∂_r)`
/// oriented, `E_3 = ∂_r`. On a Fermi tube this is `(e_s, e_θ, ∂_u)`.
pub struct Adapted<M: CollarMetric> {
    pub metric: M,
}

/// Orthonormal pair of the metric `first` with the second vector along `∂_b`.
pub fn adapted_pair(first: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = first.determinant();
    if !(det > 0.0) || !(first[(1, 1)] > 0.0) {
        return Err(GeomError::Degenerate("leaf metric is not positive definite".into()));
    }
    let gbb = first[(1, 1)];
    let e2 = nalgebra::Vector2::new(0.0, 1.0 / gbb.sqrt());
    // I-orthogonal to ∂_b, unit length, positively oriented.
    let e1 = nalgebra::Vector2::new(gbb, -first[(0, 1)]) / (gbb * det).sqrt();
    Ok(Matrix2::from_columns(&[e1, e2]))
}

impl<M: CollarMetric> FrameRule for Adapted<M> {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        Ok(tangential(&adapted_pair(&self.metric.leaf(bp, r)?.first)?))
    }
}

/// Constant extension of the frame of `base` on the leaf at `from`: tangential
/// components `A_r⁻¹ A_from c`, normal component unchanged.
pub struct Constant<R: FrameRule> {
    pub base: R,
    pub from: f64,
}

pub fn constant_extension(base: &Matrix3<f64>, leaf: &LeafNode) -> Result<Matrix3<f64>> {
    let inv = leaf.a.try_inverse().ok_or(GeomError::Focal { r: f64::NAN, det: leaf.a.determinant() })?;
    Ok(tangential(&inv) * base)
}

impl<R: FrameRule> FrameRule for Constant<R> {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        let lift = if self.from == 0.0 { Matrix3::identity() } else { tangential(&bp.leaf(self.from)?.a) };
        constant_extension(&(lift * self.base.frame(bp, self.from)?), &bp.leaf(r)?)
    }
}

pub type GaugeFn = Box<dyn Fn(f64, f64, f64) -> Matrix3<f64> + Send + Sync>;

/// `E · g(a, b, r)` for a rotation field `g`.
pub struct Gauged<R: FrameRule> {
    pub base: R,
    pub gauge: GaugeFn,
}

impl<R: FrameRule> FrameRule for Gauged<R> {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        Ok(self.base.frame(bp, r)? * (self.gauge)(bp.forms.a, bp.forms.b, r))
    }
}

/// Frame at infinity on the warped model: tangential components mapped by `V_r⁻¹`
/// with `V_r = (I − B_r)/√2`.
pub struct AtInfinity<R: FrameRule> {
    pub base: R,
}

pub fn v_matrix(weingarten: &Matrix2<f64>) -> Matrix2<f64> {
    (Matrix2::identity() - weingarten) / SQRT_2
}

impl<R: FrameRule> FrameRule for AtInfinity<R> {
    fn frame(&self, bp: &BasePoint, r: f64) -> Result<Matrix3<f64>> {
        let leaf = bp.leaf(r)?;
        let inv = v_matrix(&leaf.weingarten).try_inverse().ok_or_else(|| GeomError::Degenerate("I - B is singular".into()))?;
        Ok(tangential(&inv) * self.base.frame(bp, r)?)
    }
}

/// Frame twist and tilt parameters shared by the factories below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist {
    pub n_s: f64,
    pub n_theta: f64,
    /// Period of the first chart coordinate.
    pub length: f64,
}

impl Twist {
    /// `α = 2π n_s a / L + n_θ b`.
    pub fn angle(&self, a: f64, b: f64) -> f64 {
        2.0 * PI * self.n_s * a / self.length + self.n_theta * b
    }
}

/// The constant adapted frame of the hyperbolic collar.
pub fn fermi_frame() -> Box<dyn FrameRule> {
    Box::new(Adapted { metric: crate::foliation::HyperbolicCollar })
}

/// Adapted frame rotated by `α` about `E_3`.
pub fn twisted_frame(twist: Twist) -> Box<dyn FrameRule> {
    Box::new(Gauged { base: fermi_frame(), gauge: Box::new(move |a, b, _| rot_z(twist.angle(a, b))) })
}

/// `E_Fermi · R_x(β) · R_z(α)`: a constant frame whose third vector leans off
/// the normal by `β`.
pub fn tilted_frame(beta: f64, twist: Twist) -> Box<dyn FrameRule> {
    Box::new(Gauged { base: fermi_frame(), gauge: Box::new(move |a, b, _| rot_x(beta) * rot_z(twist.angle(a, b))) })
}

/// Adapted frame rotating about the normal at `rate` radians per unit distance.
pub fn rotating_frame(rate: f64) -> Box<dyn FrameRule> {
    Box::new(Gauged { base: fermi_frame(), gauge: Box::new(move |_, _, r| rot_z(rate * r)) })
}

/// Frame field sampled on `grid × radii`; sample `(ir, k)` lives at `ir * grid.len() + k`.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: Grid2,
    pub radii: Vec<f64>,
    pub frames: Vec<Matrix3<f64>>,
    /// Rows are the dual coframe `ε^i` in collar components.
    pub coframes: Vec<Matrix3<f64>>,
    pub leaves: Vec<LeafNode>,
}

impl FrameField {
    pub fn sample<R: FrameRule + ?Sized, M: CollarMetric>(
        base: &[BasePoint],
        grid: &Grid2,
        radii: &[f64],
        rule: &R,
        metric: &M,
    ) -> Result<Self> {
        if base.len() != grid.len() {
            return Err(GeomError::GridMismatch(format!("{} base points on a grid of {}", base.len(), grid.len())));
        }
        let n = grid.len();
        let pairs: Result<Vec<(Matrix3<f64>, LeafNode)>> = (0..n * radii.len())
            .into_par_iter()
            .map(|idx| {
                let (bp, r) = (&base[idx % n], radii[idx / n]);
                Ok((rule.frame(bp, r)?, metric.leaf(bp, r)?))
            })
            .collect();
        let (frames, leaves): (Vec<_>, Vec<_>) = pairs?.into_iter().unzip();
        Self::from_parts(grid.clone(), radii.to_vec(), frames, leaves)
    }

    pub fn from_parts(grid: Grid2, radii: Vec<f64>, frames: Vec<Matrix3<f64>>, leaves: Vec<LeafNode>) -> Result<Self> {
        let coframes: Option<Vec<Matrix3<f64>>> = frames.iter().map(|e| e.try_inverse()).collect();
        let coframes = coframes.ok_or_else(|| GeomError::Degenerate("frame is not invertible".into()))?;
        let field = Self { grid, radii, frames, coframes, leaves };
        let res = field.orthonormality_residual();
        if res > 1e-8 {
            return Err(GeomError::NotOrthonormal(res));
        }
        if field.frames.iter().any(|e| e.determinant() <= 0.0) {
            return Err(GeomError::Degenerate("frame is not positively oriented".into()));
        }
        Ok(field)
    }

    pub fn index(&self, ir: usize, k: usize) -> usize {
        ir * self.grid.len() + k
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.frames.iter().zip(&self.leaves).map(|(e, l)| orthonormality_residual(e, &l.first)).fold(0.0, f64::max)
    }

    /// `max |ε^i(E_j) − δ_ij|`.
    pub fn duality_residual(&self) -> f64 {
        self.frames.iter().zip(&self.coframes).map(|(e, c)| (c * e - Matrix3::identity()).amax()).fold(0.0, f64::max)
    }
}

/// Constant extension of frames given on the base leaf over `radii`.
pub fn build_constant_frame(base_frames: &[Matrix3<f64>], base: &[BasePoint], grid: &Grid2, radii: &[f64]) -> Result<FrameField> {
    if base_frames.len() != grid.len() || base.len() != grid.len() {
        return Err(GeomError::GridMismatch("base frames must cover the grid".into()));
    }
    for (e, bp) in base_frames.iter().zip(base) {
        let res = orthonormality_residual(e, &bp.forms.first);
        if res > 1e-8 {
            return Err(GeomError::NotOrthonormal(res));
        }
    }
    let n = grid.len();
    let pairs: Result<Vec<(Matrix3<f64>, LeafNode)>> = (0..n * radii.len())
        .into_par_iter()
        .map(|idx| {
            let leaf = base[idx % n].leaf(radii[idx / n])?;
            Ok((constant_extension(&base_frames[idx % n], &leaf)?, leaf))
        })
        .collect();
    let (frames, leaves) = pairs?.into_iter().unzip();
    FrameField::from_parts(grid.clone(), radii.to_vec(), frames, leaves)
}

/// Pointwise rotations `g` with `B = A · g`.
#[derive(Clone, Debug)]
pub struct GaugeMap {
    pub grid: Grid2,
    pub radii: Vec<f64>,
    pub g: Vec<Matrix3<f64>>,
}

impl GaugeMap {
    /// `max |gᵀg − 1|` and `max |det g − 1|`.
    pub fn rotation_residual(&self) -> f64 {
        self.g
            .iter()
            .map(|g| (g.transpose() * g - Matrix3::identity()).amax().max((g.determinant() - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// `max_{k, r} ‖g_r − g_{r_0}‖_F`.
    pub fn radial_deviation(&self) -> f64 {
        let n = self.grid.len();
        (0..self.g.len()).map(|idx| (self.g[idx] - self.g[idx % n]).norm()).fold(0.0, f64::max)
    }
}

pub fn gauge_between(a: &FrameField, b: &FrameField) -> Result<GaugeMap> {
    if a.grid != b.grid || a.radii != b.radii {
        return Err(GeomError::GridMismatch("frame fields live on different collars".into()));
    }
    let g = a.coframes.iter().zip(&b.frames).map(|(c, e)| c * e).collect();
    Ok(GaugeMap { grid: a.grid.clone(), radii: a.radii.clone(), g })
}

/// Comparison gauge of a field with its own base frame, pulled back to the base
/// leaf through `A_r`; zero deviation characterises constant frames.
pub fn comparison_gauge(field: &FrameField) -> GaugeMap {
    let n = field.grid.len();
    let base_ir = field.radii.iter().position(|r| r.abs() < 1e-15);
    let g = (0..field.frames.len())
        .map(|idx| {
            let pulled = tangential(&field.leaves[idx].a) * field.frames[idx];
            match base_ir {
                Some(ir) => field.coframes[field.index(ir, idx % n)] * pulled,
                None => {
                    let leaf0 = field.leaves[idx % n];
                    let base = tangential(&leaf0.a) * field.frames[idx % n];
                    base.try_inverse().unwrap_or_else(Matrix3::identity) * pulled
                }
            }
        })
        .collect();
    GaugeMap { grid: field.grid.clone(), radii: field.radii.clone(), g }
}

pub fn verify_constant(field: &FrameField) -> f64 {
    comparison_gauge(field).radial_deviation()
}

/// Frame at infinity of a field on the hyperbolic collar, living on the warped
/// model with base metric `inf.first`.
pub fn frame_at_infinity(field: &FrameField, inf: &InfinityGeometry) -> Result<FrameField> {
    if inf.grid != field.grid {
        return Err(GeomError::GridMismatch("infinity data on a different grid".into()));
    }
    let n = field.grid.len();
    let mut frames = Vec::with_capacity(field.frames.len());
    let mut leaves = Vec::with_capacity(field.frames.len());
    for (idx, (e, leaf)) in field.frames.iter().zip(&field.leaves).enumerate() {
        let r = field.radii[idx / n];
        let inv = v_matrix(&leaf.weingarten).try_inverse().ok_or_else(|| GeomError::Degenerate("I - B is singular".into()))?;
        frames.push(tangential(&inv) * e);
        leaves.push(LeafNode {
            first: inf.warped_leaf_metric(idx % n, r),
            weingarten: -Matrix2::identity(),
            a: Matrix2::identity() * r.exp(),
        });
    }
    FrameField::from_parts(field.grid.clone(), field.radii.clone(), frames, leaves)
}
