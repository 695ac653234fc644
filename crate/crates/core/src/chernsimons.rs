//! Chern-Simons densities of frame fields: the SO(3) form of the Levi-Civita
//! connection, its adapted-frame reduction, gauge-change terms, and the
//! PSL₂(ℂ) form pulled back through the developing map.
//!
//! Every density is the value of the 3-form on a positively oriented orthonormal
//! frame, i.e. a coefficient against `dvol = da_r ∧ dr`.
//! Pairing on so(3): `⟨X, Y⟩ = −tr(XY) / 8π²`.

use crate::cartan::{koszul, on_coordinate, point_connection, point_jet, weitzenbock_shape, Connection, Jet, POINT_STEP};
use crate::error::{GeomError, Result};
use crate::foliation::{Collar, HyperbolicCollar};
use crate::frames::FrameRule;
use crate::hypgeom::{frame_to_isometry, OrthonormalFrame3};
use crate::numerics::Grid2;
use crate::surfaces::Parametrization;
use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;

const FOUR_PI2: f64 = 4.0 * PI * PI;

/// Coordinates of an antisymmetric matrix in the basis `L_i v = e_i × v`.
pub fn vee(x: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(x[(2, 1)], x[(0, 2)], x[(1, 0)])
}

pub fn pairing(x: &Matrix3<f64>, y: &Matrix3<f64>) -> f64 {
    -(x * y).trace() / (2.0 * FOUR_PI2)
}

/// `cs(ω)` for the Levi-Civita connection of a hyperbolic metric, whose
/// curvature is `Ω^i_j = −ε^i ∧ ε^j`:
/// `(1/4π²)[det(ω¹₂, ω²₃, ω³₁)(E_·) − ω¹₂(E₃) − ω²₃(E₁) − ω³₁(E₂)]`.
pub fn so3_density(w: &Connection) -> f64 {
    let row = |i: usize, j: usize| Vector3::new(w[0][(i, j)], w[1][(i, j)], w[2][(i, j)]);
    let m = Matrix3::from_rows(&[row(0, 1).transpose(), row(1, 2).transpose(), row(2, 0).transpose()]);
    (m.determinant() - w[2][(0, 1)] - w[0][(1, 2)] - w[1][(2, 0)]) / FOUR_PI2
}

pub fn so3_cs_pullback(forms: &[Connection]) -> Vec<f64> {
    forms.iter().map(so3_density).collect()
}

/// Tolerance on `E_3 = ∂_r` for the adapted reduction.
pub const ADAPTED_TOL: f64 = 1e-9;

/// `(1/4π²) K_r ω¹₂(∂_r)` with `K_r = det B_r − 1`.
pub fn adapted_reduction(jet: &Jet, w: &Connection) -> Result<f64> {
    let dev = (jet.e.column(2) - Vector3::z()).amax().max(jet.e[(2, 0)].abs()).max(jet.e[(2, 1)].abs());
    if dev > ADAPTED_TOL {
        return Err(GeomError::NotAdapted(dev));
    }
    let k = jet.leaf.weingarten.determinant() - 1.0;
    Ok(k * on_coordinate(w, &jet.coframe(), 2)[(0, 1)] / FOUR_PI2)
}

/// Gauge `g = ε_s E_t` relating `t = s·g`, with derivatives along `(∂_a, ∂_b, ∂_r)`.
pub fn gauge_jet(s: &Jet, t: &Jet) -> (Matrix3<f64>, [Matrix3<f64>; 3]) {
    let c = s.coframe();
    let g = c * t.e;
    let dg = [0, 1, 2].map(|mu| s.d_coframe(mu) * t.e + c * t.de[mu]);
    (g, dg)
}

/// `⟨Ad_{g⁻¹} ω ∧ g*μ⟩(∂_a, ∂_b)` with `ω` the connection of `s`.
pub fn exact_term(s: &Jet, w_s: &Connection, t: &Jet) -> f64 {
    let (g, dg) = gauge_jet(s, t);
    let gi = g.transpose();
    let c = s.coframe();
    let ad = |mu: usize| gi * on_coordinate(w_s, &c, mu) * g;
    let mu = |nu: usize| gi * dg[nu];
    pairing(&ad(0), &mu(1)) - pairing(&ad(1), &mu(0))
}

/// `−(1/6)⟨μ ∧ [μ ∧ μ]⟩` on the frame of `t`.
pub fn wess_zumino_density(s: &Jet, t: &Jet) -> f64 {
    let (g, dg) = gauge_jet(s, t);
    let gi = g.transpose();
    let cols: Vec<Vector3<f64>> = (0..3)
        .map(|k| {
            let d = dg[0] * t.e[(0, k)] + dg[1] * t.e[(1, k)] + dg[2] * t.e[(2, k)];
            vee(&(gi * d))
        })
        .collect();
    -Matrix3::from_columns(&cols).determinant() / FOUR_PI2
}

/// Pointwise gauge identity pieces at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeTerms {
    pub cs_s: f64,
    pub cs_t: f64,
    /// Exact-term 2-form on the leaf, coefficient of `da db`.
    pub exact_leaf: f64,
    pub wess_zumino: f64,
}

pub fn gauge_transform_terms(s: &Jet, t: &Jet) -> GaugeTerms {
    let w_s = koszul(s);
    GaugeTerms { cs_s: so3_density(&w_s), cs_t: so3_density(&koszul(t)), exact_leaf: exact_term(s, &w_s, t), wess_zumino: wess_zumino_density(s, t) }
}

/// Developing map at a collar point: the isometry carrying the standard frame
/// at `ĵ` to the frame of `rule`.
pub fn developing_map<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64) -> Result<Matrix2<Complex64>> {
    let bp = collar.base_point(a, b)?;
    let (p, basis) = collar.ambient_basis(&bp, r)?;
    let e = basis * rule.frame(&bp, r)?;
    Ok(*frame_to_isometry(&OrthonormalFrame3::new(p, e)?)?.matrix())
}

/// Picks the lift `±m` nearest to `reference`.
pub fn align_sign(m: Matrix2<Complex64>, reference: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    if (m - reference).norm() > (m + reference).norm() {
        -m
    } else {
        m
    }
}

/// Sequential sign continuation over a grid in storage order: each node is
/// aligned with its predecessor along the second axis, and each row start with
/// the start of the previous row.
pub fn continue_signs(grid: &Grid2, lifts: &mut [Matrix2<Complex64>]) -> Result<()> {
    if lifts.len() != grid.len() {
        return Err(GeomError::GridMismatch("lift count".into()));
    }
    let n2 = grid.axes[1].n;
    for k in 1..lifts.len() {
        let prev = if k % n2 == 0 { k - n2 } else { k - 1 };
        let aligned = align_sign(lifts[k], &lifts[prev]);
        if (aligned - lifts[prev]).norm() > 0.5 * (aligned.norm() + lifts[prev].norm()) {
            return Err(GeomError::SignContinuation(format!("jump at node {k}")));
        }
        lifts[k] = aligned;
    }
    Ok(())
}

/// Values of `h*, e*, f*` (the (1,1), (1,2), (2,1) entries of `g⁻¹dg`) on the
/// frame vectors, as columns.
pub fn hef<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64, h: f64) -> Result<(Matrix3<Complex64>, Matrix3<f64>)> {
    let g0 = developing_map(collar, rule, a, b, r)?;
    let bp = collar.base_point(a, b)?;
    let e = rule.frame(&bp, r)?;
    let mut dg = [Matrix2::<Complex64>::zeros(); 3];
    for (mu, d) in dg.iter_mut().enumerate() {
        let at = |s: f64| -> Result<Matrix2<Complex64>> {
            let mut x = [a, b, r];
            x[mu] += s;
            Ok(align_sign(developing_map(collar, rule, x[0], x[1], x[2])?, &g0))
        };
        let p = [at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?];
        *d = ((p[0] - p[3]) + (p[2] - p[1]) * Complex64::new(8.0, 0.0)) / Complex64::new(12.0 * h, 0.0);
    }
    let gi = Matrix2::new(g0[(1, 1)], -g0[(0, 1)], -g0[(1, 0)], g0[(0, 0)]);
    let mut out = Matrix3::zeros();
    for k in 0..3 {
        let d = dg[0] * Complex64::new(e[(0, k)], 0.0) + dg[1] * Complex64::new(e[(1, k)], 0.0) + dg[2] * Complex64::new(e[(2, k)], 0.0);
        let mu = gi * d;
        out[(0, k)] = mu[(0, 0)];
        out[(1, k)] = mu[(0, 1)];
        out[(2, k)] = mu[(1, 0)];
    }
    Ok((out, e))
}

fn det3(m: &Matrix3<Complex64>) -> Complex64 {
    m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)]) - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
        + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
}

/// Density of `4iπ² σ*cs(ω_ϱ̂) = i σ*(h* ∧ e* ∧ f*)`.
pub fn psl2_density<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64) -> Result<Complex64> {
    psl2_density_with_step(collar, rule, a, b, r, PSL_STEP)
}

/// Default finite-difference step of the developing map.
pub const PSL_STEP: f64 = 1e-3;

pub fn psl2_density_with_step<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64, h: f64) -> Result<Complex64> {
    let (m, _) = hef(collar, rule, a, b, r, h)?;
    Ok(Complex64::i() * det3(&m))
}

/// `β = Σ_cyc ε^i ∧ ω^j_k` in coordinates, `β[(μ, ν)] = β(∂_μ, ∂_ν)`.
pub fn coframe_wedge(jet: &Jet, w: &Connection) -> Matrix3<f64> {
    let c = jet.coframe();
    let om = [0, 1, 2].map(|mu| on_coordinate(w, &c, mu));
    let mut beta = Matrix3::zeros();
    for mu in 0..3 {
        for nu in 0..3 {
            beta[(mu, nu)] = (0..3)
                .map(|i| {
                    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                    c[(i, mu)] * om[nu][(j, k)] - c[(i, nu)] * om[mu][(j, k)]
                })
                .sum();
        }
    }
    beta
}

/// Both sides of the complex decomposition at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decomposition {
    pub psl2: Complex64,
    /// `1 − ¼ dβ + iπ² cs`, all on the frame.
    pub rhs: Complex64,
    pub so3: f64,
    pub d_beta: f64,
    /// `|β(∂_a, ∂_b)/√det I + H̄ − H^s|`.
    pub exact_form_residual: f64,
}

impl Decomposition {
    pub fn residual(&self) -> f64 {
        (self.psl2 - self.rhs).norm()
    }
}

pub fn decomposition_residual<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64) -> Result<Decomposition> {
    let metric = HyperbolicCollar;
    let (jet, w) = point_connection(collar, rule, &metric, a, b, r)?;
    let beta = coframe_wedge(&jet, &w);
    let h = 1e-2;
    let mut d_beta = 0.0;
    // dβ(∂_a, ∂_b, ∂_r) = ∂_a β_br − ∂_b β_ar + ∂_r β_ab.
    for (mu, (p, q), sign) in [(0, (1, 2), 1.0), (1, (0, 2), -1.0), (2, (0, 1), 1.0)] {
        let at = |s: f64| -> Result<f64> {
            let mut x = [a, b, r];
            x[mu] += s;
            let (j, w) = point_connection(collar, rule, &metric, x[0], x[1], x[2])?;
            Ok(coframe_wedge(&j, &w)[(p, q)])
        };
        let v = [at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?];
        d_beta += sign * ((v[0] - v[3]) + 8.0 * (v[2] - v[1])) / (12.0 * h);
    }
    let d_beta = d_beta * jet.e.determinant();
    let so3 = so3_density(&w);
    let psl2 = psl2_density(collar, rule, a, b, r)?;
    let shape = weitzenbock_shape(&jet);
    let exact_form_residual = (beta[(0, 1)] / jet.area_density() + jet.leaf.weingarten.trace() - shape.mean).abs();
    Ok(Decomposition { psl2, rhs: Complex64::new(1.0 - 0.25 * d_beta, PI * PI * so3), so3, d_beta, exact_form_residual })
}

/// Point jets at default step, re-exported for drivers that mix engines.
pub fn jet_at<P: Parametrization, R: FrameRule + ?Sized>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64) -> Result<Jet> {
    point_jet(collar, rule, &HyperbolicCollar, a, b, r, POINT_STEP)
}
