//! Upper half-space model of hyperbolic 3-space.
//!
//! Points are `(x1, x2, t)` with `t > 0` and metric `(dx1² + dx2² + dt²)/t²`.
//! Orientation-preserving isometries are `PSL₂(ℂ)` matrices acting through the
//! quaternionic Poincaré extension `q ↦ (a q + b)(c q + d)⁻¹` with `q = z + t j`.
//! The base frame is `(∂x1, ∂x2, ∂t)` at `ĵ = (0, 0, 1)`.

use crate::error::{GeomError, Result};
use nalgebra::{Matrix2, Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector3};
use num_complex::Complex64;

/// Tolerance for orthonormality checks on frames handed in by callers.
pub const FRAME_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperbolicPoint {
    pub x1: f64,
    pub x2: f64,
    pub t: f64,
}

impl HyperbolicPoint {
    pub fn new(x1: f64, x2: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !x1.is_finite() || !x2.is_finite() || !t.is_finite() {
            return Err(GeomError::Domain(format!("height must be positive and finite, got t = {t}")));
        }
        Ok(Self { x1, x2, t })
    }

    /// The base point `ĵ`.
    pub const fn j_hat() -> Self {
        Self { x1: 0.0, x2: 0.0, t: 1.0 }
    }

    pub fn coords(&self) -> Vector3<f64> {
        Vector3::new(self.x1, self.x2, self.t)
    }

    pub fn from_coords(v: &Vector3<f64>) -> Result<Self> {
        Self::new(v[0], v[1], v[2])
    }

    fn quaternion(&self) -> Quaternion<f64> {
        Quaternion::new(self.x1, self.x2, self.t, 0.0)
    }
}

/// Tangent vector with components in the coordinate basis `(∂x1, ∂x2, ∂t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector3 {
    pub base: HyperbolicPoint,
    pub components: Vector3<f64>,
}

impl TangentVector3 {
    pub fn new(base: HyperbolicPoint, components: Vector3<f64>) -> Self {
        Self { base, components }
    }

    pub fn norm(&self) -> f64 {
        self.components.norm() / self.base.t
    }
}

/// Oriented orthonormal frame; the columns of `e` are `E1, E2, E3` in coordinate components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthonormalFrame3 {
    pub base: HyperbolicPoint,
    pub e: Matrix3<f64>,
}

impl OrthonormalFrame3 {
    /// Builds a frame and checks it against the hyperbolic metric at `base`.
    pub fn new(base: HyperbolicPoint, e: Matrix3<f64>) -> Result<Self> {
        let f = Self { base, e };
        let res = f.orthonormality_residual();
        if res > FRAME_TOL || e.determinant() <= 0.0 {
            return Err(GeomError::NotOrthonormal(res));
        }
        Ok(f)
    }

    /// The standard frame `t·(∂x1, ∂x2, ∂t)` at `p`.
    pub fn standard(p: HyperbolicPoint) -> Self {
        Self { base: p, e: Matrix3::identity() * p.t }
    }

    pub fn vector(&self, i: usize) -> TangentVector3 {
        TangentVector3::new(self.base, self.e.column(i).into())
    }

    /// Max-norm of `EᵀgE − I`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.e.transpose() * metric_at(&self.base).unwrap_or_else(|_| Matrix3::zeros()) * self.e;
        (g - Matrix3::identity()).amax()
    }
}

/// `PSL₂(ℂ)` element stored as a determinant-one matrix with a fixed sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryMatrix(pub Matrix2<Complex64>);

impl IsometryMatrix {
    /// Scales to determinant one and fixes the sign so that the first entry with
    /// modulus above `1e-12` has positive real part (positive imaginary part on a tie).
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        if !(det.norm() > 1e-300) || !det.is_finite() {
            return Err(GeomError::Degenerate("isometry matrix has zero determinant".into()));
        }
        let scaled = m / det.sqrt();
        Ok(Self(normalize_sign(scaled)))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(normalize_sign(self.0 * other.0))
    }

    pub fn inverse(&self) -> Self {
        let m = &self.0;
        Self(normalize_sign(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])))
    }

    fn entries_as_quaternions(&self) -> [Quaternion<f64>; 4] {
        let q = |z: Complex64| Quaternion::new(z.re, z.im, 0.0, 0.0);
        [q(self.0[(0, 0)]), q(self.0[(0, 1)]), q(self.0[(1, 0)]), q(self.0[(1, 1)])]
    }

    /// Differential of the action at `p`, in coordinate components.
    pub fn differential(&self, p: &HyperbolicPoint) -> Matrix3<f64> {
        let [a, b, c, d] = self.entries_as_quaternions();
        let q = p.quaternion();
        let den_inv = (c * q + d).try_inverse().expect("denominator of a Möbius map never vanishes on H^3");
        let image = (a * q + b) * den_inv;
        let left = a - image * c;
        let mut out = Matrix3::zeros();
        for (col, basis) in [
            Quaternion::new(1.0, 0.0, 0.0, 0.0),
            Quaternion::new(0.0, 1.0, 0.0, 0.0),
            Quaternion::new(0.0, 0.0, 1.0, 0.0),
        ]
        .into_iter()
        .enumerate()
        {
            let v = left * basis * den_inv;
            out.set_column(col, &Vector3::new(v.w, v.i, v.j));
        }
        out
    }
}

fn normalize_sign(m: Matrix2<Complex64>) -> Matrix2<Complex64> {
    for z in [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]] {
        if z.norm() > 1e-12 {
            let flip = z.re < 0.0 || (z.re == 0.0 && z.im < 0.0);
            return if flip { -m } else { m };
        }
    }
    m
}

/// Metric tensor `I/t²` in coordinate components.
pub fn metric_at(p: &HyperbolicPoint) -> Result<Matrix3<f64>> {
    if !(p.t > 0.0) {
        return Err(GeomError::Domain(format!("non-positive height t = {}", p.t)));
    }
    Ok(Matrix3::identity() / (p.t * p.t))
}

/// Hyperbolic inner product of two coordinate vectors at `p`.
pub fn inner(p: &HyperbolicPoint, u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    u.dot(v) / (p.t * p.t)
}

pub fn distance(p: &HyperbolicPoint, q: &HyperbolicPoint) -> f64 {
    let d2 = (p.coords() - q.coords()).norm_squared();
    (1.0 + d2 / (2.0 * p.t * q.t)).acosh()
}

/// Christoffel contraction `Γ(X, Y)`, so that `∇_X Y = D_X Y + Γ(X, Y)` in coordinates.
pub fn christoffel(p: &HyperbolicPoint, x: &Vector3<f64>, y: &Vector3<f64>) -> Vector3<f64> {
    let e_t = Vector3::new(0.0, 0.0, 1.0);
    (x.dot(y) * e_t - x[2] * y - y[2] * x) / p.t
}

pub fn apply_isometry(g: &IsometryMatrix, p: &HyperbolicPoint) -> Result<HyperbolicPoint> {
    let [a, b, c, d] = g.entries_as_quaternions();
    let q = p.quaternion();
    let den = c * q + d;
    let den_inv = den
        .try_inverse()
        .ok_or_else(|| GeomError::Degenerate("Möbius denominator vanished".into()))?;
    let image = (a * q + b) * den_inv;
    HyperbolicPoint::new(image.w, image.i, image.j)
}

/// Pushes the standard frame at `ĵ` forward by `g`.
pub fn push_standard_frame(g: &IsometryMatrix) -> Result<OrthonormalFrame3> {
    let base = apply_isometry(g, &HyperbolicPoint::j_hat())?;
    Ok(OrthonormalFrame3 { base, e: g.differential(&HyperbolicPoint::j_hat()) })
}

/// `su(2)` elements whose infinitesimal action at `ĵ` is `L1, L2, L3`.
fn su2_generator(k: usize) -> Matrix2<Complex64> {
    let h = Complex64::new(0.5, 0.0);
    let ih = Complex64::new(0.0, 0.5);
    let z = Complex64::new(0.0, 0.0);
    match k {
        0 => Matrix2::new(z, ih, ih, z),
        1 => Matrix2::new(z, -h, h, z),
        _ => Matrix2::new(ih, z, z, -ih),
    }
}

/// Lift of a rotation of `T_ĵ ℍ³` (in the standard frame) to `SU(2)`.
pub fn rotation_to_su2(q: &Matrix3<f64>) -> Matrix2<Complex64> {
    // Quaternion extraction stays finite for rotations by angles near π.
    let uq = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*q));
    let mut x = Matrix2::identity() * Complex64::new(uq.w, 0.0);
    for (k, v) in uq.imag().iter().enumerate() {
        x += su2_generator(k) * Complex64::new(2.0 * v, 0.0);
    }
    x
}

/// The isometry sending the standard frame at `ĵ` to `f`.
pub fn frame_to_isometry(f: &OrthonormalFrame3) -> Result<IsometryMatrix> {
    let res = f.orthonormality_residual();
    if res > FRAME_TOL || f.e.determinant() <= 0.0 {
        return Err(GeomError::NotOrthonormal(res));
    }
    let p = f.base;
    let st = p.t.sqrt();
    let z = Complex64::new(p.x1, p.x2);
    let translate = Matrix2::new(Complex64::new(st, 0.0), z / st, Complex64::new(0.0, 0.0), Complex64::new(1.0 / st, 0.0));
    let rot = rotation_to_su2(&(f.e / p.t));
    IsometryMatrix::new(translate * rot)
}

/// Result of flowing along a geodesic.
#[derive(Clone, Copy, Debug)]
pub struct FlowResult {
    pub point: HyperbolicPoint,
    /// Unit velocity at the endpoint.
    pub velocity: Vector3<f64>,
    /// Parallel transport along the geodesic, coordinate components to coordinate components.
    pub transport: Matrix3<f64>,
}

/// Completes a unit vector `n` at `p` to an oriented orthonormal frame `(f1, f2, n)`.
pub fn complete_frame(p: &HyperbolicPoint, n: &Vector3<f64>) -> Matrix3<f64> {
    let t = p.t;
    let nh = n / n.norm();
    let seed = if nh[0].abs() < 0.6 { Vector3::x() } else { Vector3::y() };
    let f1 = (seed - nh * nh.dot(&seed)).normalize();
    let f2 = nh.cross(&f1);
    Matrix3::from_columns(&[f1 * t, f2 * t, nh * t])
}

/// Geodesic from `p` with initial unit velocity `n`, followed for arclength `r`.
///
/// The transport is the differential that carries frames along the flow line
/// isometrically; it is the identity at `r = 0`.
pub fn normal_flow(p: &HyperbolicPoint, n: &TangentVector3, r: f64) -> Result<FlowResult> {
    let len = inner(p, &n.components, &n.components).sqrt();
    if (len - 1.0).abs() > 1e-8 {
        return Err(GeomError::Domain(format!("flow direction must be unit, got norm {len}")));
    }
    let frame = complete_frame(p, &n.components);
    let g = frame_to_isometry(&OrthonormalFrame3 { base: *p, e: frame })?;
    let q0 = HyperbolicPoint::new(0.0, 0.0, r.exp())?;
    let point = apply_isometry(&g, &q0)?;
    let moved = g.differential(&q0) * r.exp();
    let transport = moved * frame.try_inverse().ok_or_else(|| GeomError::Degenerate("frame".into()))?;
    Ok(FlowResult { point, velocity: moved.column(2).into(), transport })
}

/// Chart around the vertical axis geodesic of the loxodromic quotient
/// `(u, s, θ) ~ (u, s + L, θ + twist)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FermiChart {
    pub length: f64,
    pub twist: f64,
}

impl FermiChart {
    pub fn new(length: f64, twist: f64) -> Result<Self> {
        if !(length > 0.0) || !twist.is_finite() {
            return Err(GeomError::Domain(format!("translation length must be positive, got {length}")));
        }
        Ok(Self { length, twist })
    }

    /// Deck transformation realising `(s, θ) ↦ (s + L, θ + twist)`.
    pub fn deck(&self) -> IsometryMatrix {
        let half = Complex64::new(0.5 * self.length, -0.5 * self.twist);
        IsometryMatrix::new(Matrix2::new(half.exp(), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), (-half).exp()))
            .expect("diagonal exponential matrix is invertible")
    }
}

/// Fermi coordinates about the vertical axis: `e^s (tanh u cos θ, −tanh u sin θ, sech u)`.
///
/// The sign of the second component makes `(∂s, ∂θ, ∂u)` positively oriented.
pub fn fermi_embed(chart: &FermiChart, u: f64, s: f64, theta: f64) -> Result<HyperbolicPoint> {
    let _ = chart;
    if !(u > 0.0) {
        return Err(GeomError::Domain(format!("Fermi radius must be positive, got {u}")));
    }
    Ok(fermi_point(u, s, theta))
}

pub(crate) fn fermi_point(u: f64, s: f64, theta: f64) -> HyperbolicPoint {
    let es = s.exp();
    let th = u.tanh();
    HyperbolicPoint { x1: es * th * theta.cos(), x2: -es * th * theta.sin(), t: es / u.cosh() }
}

/// Coordinate vectors `(∂u, ∂s, ∂θ)` of the Fermi chart as columns.
pub fn fermi_basis(u: f64, s: f64, theta: f64) -> Matrix3<f64> {
    let es = s.exp();
    let (th, sech) = (u.tanh(), 1.0 / u.cosh());
    let (c, sn) = (theta.cos(), theta.sin());
    let du = Vector3::new(es * sech * sech * c, -es * sech * sech * sn, -es * sech * th);
    let ds = Vector3::new(es * th * c, -es * th * sn, es * sech);
    let dth = Vector3::new(-es * th * sn, -es * th * c, 0.0);
    Matrix3::from_columns(&[du, ds, dth])
}
