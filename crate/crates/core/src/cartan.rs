//! Connection forms and hypersurface invariants of frame fields on collars.
//!
//! Everything is expressed in collar coordinates `(a, b, r)` with metric
//! `G = I_r ⊕ dr²`. A [`Jet`] holds the frame and metric at a point together
//! with their coordinate derivatives; connection values are then purely
//! algebraic. Two jet sources exist: grid jets (spectral along the leaf, FD4
//! radially) and point jets (FD4 in all directions).
//!
//! Conventions: `ω^i_j(X) = G(E_i, ∇_X E_j)`; `Connection[k][(i, j)] = ω^i_j(E_k)`.
//! The leaf normal is `N = ∂_r`, so `N^i = G(N, E_i)` is the third row of `E`.

use crate::error::{GeomError, Result};
use crate::foliation::{collar_metric, BasePoint, Collar, CollarMetric, LeafNode};
use crate::frames::FrameRule;
use crate::numerics::{d1, Differentiator, Grid2};
use crate::surfaces::Parametrization;
use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

/// Values of a connection on the frame vectors.
pub type Connection = [Matrix3<f64>; 3];

/// Default radial FD step.
pub const RADIAL_STEP: f64 = 1e-3;
/// Default tangential FD step of point jets.
pub const POINT_STEP: f64 = 2e-3;

/// Frame and metric with first derivatives along `(∂_a, ∂_b, ∂_r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub e: Matrix3<f64>,
    pub de: [Matrix3<f64>; 3],
    pub g: Matrix3<f64>,
    pub dg: [Matrix3<f64>; 3],
    pub leaf: LeafNode,
}

impl Jet {
    pub fn coframe(&self) -> Matrix3<f64> {
        self.e.try_inverse().expect("orthonormal frames are invertible")
    }

    /// Derivative of the frame matrix along `E_i`.
    pub fn along(&self, i: usize) -> Matrix3<f64> {
        self.de[0] * self.e[(0, i)] + self.de[1] * self.e[(1, i)] + self.de[2] * self.e[(2, i)]
    }

    /// `[E_i, E_j]` in collar components.
    pub fn bracket(&self, i: usize, j: usize) -> Vector3<f64> {
        self.along(i).column(j) - self.along(j).column(i)
    }

    /// `∂_μ ε` for the coframe matrix `ε = E⁻¹`.
    pub fn d_coframe(&self, mu: usize) -> Matrix3<f64> {
        let c = self.coframe();
        -c * self.de[mu] * c
    }

    /// Normal components `N^i`.
    pub fn normal_components(&self) -> Vector3<f64> {
        self.e.row(2).transpose()
    }

    pub fn area_density(&self) -> f64 {
        self.leaf.first.determinant().sqrt()
    }
}

/// Levi-Civita connection of an orthonormal frame by Koszul's formula:
/// `ω^i_j(E_k) = ½(c_kji − c_kij − c_jik)` with `c_ijk = G([E_i, E_j], E_k)`.
pub fn koszul(jet: &Jet) -> Connection {
    let mut c = [[[0.0; 3]; 3]; 3];
    for (i, ci) in c.iter_mut().enumerate() {
        for (j, cij) in ci.iter_mut().enumerate() {
            let v = jet.g * jet.bracket(i, j);
            for (k, cijk) in cij.iter_mut().enumerate() {
                *cijk = jet.e.column(k).dot(&v);
            }
        }
    }
    let mut w = [Matrix3::zeros(); 3];
    for (k, wk) in w.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                wk[(i, j)] = 0.5 * (c[k][j][i] - c[k][i][j] - c[j][i][k]);
            }
        }
    }
    w
}

/// `ω(∂_μ) = Σ_l ε^l(∂_μ) ω(E_l)`.
pub fn on_coordinate(w: &Connection, coframe: &Matrix3<f64>, mu: usize) -> Matrix3<f64> {
    w[0] * coframe[(0, mu)] + w[1] * coframe[(1, mu)] + w[2] * coframe[(2, mu)]
}

/// Largest violation of `E_k G(E_i, E_j) = 0` computed from the jet.
pub fn metric_compatibility_residual(jet: &Jet) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        let dg = jet.dg[0] * jet.e[(0, k)] + jet.dg[1] * jet.e[(1, k)] + jet.dg[2] * jet.e[(2, k)];
        let de = jet.along(k);
        let m = de.transpose() * jet.g * jet.e + jet.e.transpose() * dg * jet.e + jet.e.transpose() * jet.g * de;
        worst = worst.max(m.amax());
    }
    worst
}

/// Point jet by fourth-order differences in all three coordinates.
pub fn point_jet<P, R, M>(collar: &Collar<P>, rule: &R, metric: &M, a: f64, b: f64, r: f64, h: f64) -> Result<Jet>
where
    P: Parametrization,
    R: FrameRule + ?Sized,
    M: CollarMetric,
{
    let eval = |a: f64, b: f64, r: f64| -> Result<(Matrix3<f64>, Matrix3<f64>)> {
        let bp = collar.base_point(a, b)?;
        Ok((rule.frame(&bp, r)?, collar_metric(&metric.leaf(&bp, r)?.first)))
    };
    let bp = collar.base_point(a, b)?;
    let leaf = metric.leaf(&bp, r)?;
    let e = rule.frame(&bp, r)?;
    let mut de = [Matrix3::zeros(); 3];
    let mut dg = [Matrix3::zeros(); 3];
    for mu in 0..3 {
        let step = |s: f64| {
            let mut x = [a, b, r];
            x[mu] += s;
            eval(x[0], x[1], x[2])
        };
        let pts = [step(-2.0 * h)?, step(-h)?, step(h)?, step(2.0 * h)?];
        let combo = |f: &dyn Fn(&(Matrix3<f64>, Matrix3<f64>)) -> Matrix3<f64>| {
            ((f(&pts[0]) - f(&pts[3])) + (f(&pts[2]) - f(&pts[1])) * 8.0) / (12.0 * h)
        };
        de[mu] = combo(&|p| p.0);
        dg[mu] = combo(&|p| p.1);
    }
    Ok(Jet { e, de, g: collar_metric(&leaf.first), dg, leaf })
}

/// Jets on one leaf: spectral derivatives along the grid, FD4 radially.
#[derive(Clone, Debug)]
pub struct LeafJets {
    pub grid: Grid2,
    pub r: f64,
    pub jets: Vec<Jet>,
}

impl LeafJets {
    pub fn compute<R: FrameRule + ?Sized, M: CollarMetric>(
        base: &[BasePoint],
        diff: &Differentiator,
        rule: &R,
        metric: &M,
        r: f64,
    ) -> Result<Self> {
        let grid = diff.grid().clone();
        if base.len() != grid.len() {
            return Err(GeomError::GridMismatch("base points must cover the grid".into()));
        }
        let h = RADIAL_STEP;
        let radial: Result<Vec<_>> = base
            .par_iter()
            .map(|bp| {
                let at = |s: f64| -> Result<(Matrix3<f64>, LeafNode)> { Ok((rule.frame(bp, r + s)?, metric.leaf(bp, r + s)?)) };
                let (e, leaf) = at(0.0)?;
                let p = [at(-2.0 * h)?, at(-h)?, at(h)?, at(2.0 * h)?];
                let fd = |f: &dyn Fn(&(Matrix3<f64>, LeafNode)) -> Matrix3<f64>| ((f(&p[0]) - f(&p[3])) + (f(&p[2]) - f(&p[1])) * 8.0) / (12.0 * h);
                Ok((e, leaf, fd(&|x| x.0), fd(&|x| collar_metric(&x.1.first))))
            })
            .collect();
        let radial = radial?;
        let n = grid.len();
        let entry = |f: &dyn Fn(usize) -> Matrix3<f64>, i: usize, j: usize| (0..n).map(|k| f(k)[(i, j)]).collect::<Vec<f64>>();
        let mut de = vec![[Matrix3::zeros(); 2]; n];
        let mut dg = vec![[Matrix3::zeros(); 2]; n];
        for i in 0..3 {
            for j in 0..3 {
                let ev = entry(&|k| radial[k].0, i, j);
                let gv = entry(&|k| collar_metric(&radial[k].1.first), i, j);
                for mu in 0..2 {
                    let de_ij = diff.d(&ev, mu);
                    for k in 0..n {
                        de[k][mu][(i, j)] = de_ij[k];
                    }
                    if i < 2 && j < 2 {
                        let dg_ij = diff.d(&gv, mu);
                        for k in 0..n {
                            dg[k][mu][(i, j)] = dg_ij[k];
                        }
                    }
                }
            }
        }
        let jets = (0..n)
            .map(|k| {
                let (e, leaf, der, dgr) = radial[k];
                Jet { e, de: [de[k][0], de[k][1], der], g: collar_metric(&leaf.first), dg: [dg[k][0], dg[k][1], dgr], leaf }
            })
            .collect();
        Ok(Self { grid, r, jets })
    }

    pub fn area_weights(&self) -> Result<Vec<f64>> {
        Ok(self.grid.weights()?.iter().zip(&self.jets).map(|(w, j)| w * j.area_density()).collect())
    }

    /// `∫ f da_r` over the leaf.
    pub fn integrate(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.jets.len() {
            return Err(GeomError::GridMismatch("density length".into()));
        }
        Ok(self.area_weights()?.iter().zip(f).map(|(w, v)| w * v).sum())
    }
}

/// Connection values per node.
#[derive(Clone, Debug)]
pub struct ConnectionOneForm {
    pub values: Vec<Connection>,
}

impl ConnectionOneForm {
    /// Largest `|ω + ωᵀ|`; zero by construction.
    pub fn antisymmetry_residual(&self) -> f64 {
        self.values.iter().flat_map(|w| w.iter().map(|m| (m + m.transpose()).amax())).fold(0.0, f64::max)
    }
}

pub fn levi_civita_forms(jets: &LeafJets) -> ConnectionOneForm {
    ConnectionOneForm { values: jets.jets.par_iter().map(koszul).collect() }
}

/// so(3) generators with `L_i v = e_i × v`.
pub fn l_basis() -> [Matrix3<f64>; 3] {
    [
        Matrix3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
        Matrix3::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0),
        Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0),
    ]
}

/// Weitzenböck data on the leaf through a jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeData {
    /// `B^s` in the `(∂_a, ∂_b)` basis.
    pub weingarten: Matrix2<f64>,
    pub mean: f64,
    pub gauss: f64,
    /// `II^s(∂_a, ∂_b) − II^s(∂_b, ∂_a)`.
    pub antisymmetric: f64,
}

/// `B^s(X) = −Σ dN^i(X) E_i^⊤`.
pub fn weitzenbock_shape(jet: &Jet) -> ShapeData {
    let mut b = Matrix2::zeros();
    for mu in 0..2 {
        let dn = jet.de[mu].row(2).transpose();
        let col = -(jet.e.fixed_view::<2, 3>(0, 0) * dn);
        b.set_column(mu, &col);
    }
    let ii = second_form_coframe(jet);
    ShapeData { weingarten: b, mean: b.trace(), gauss: b.determinant(), antisymmetric: ii[(0, 1)] - ii[(1, 0)] }
}

/// `II^s(∂_μ, ∂_ν) = Σ_i N^i ∂_μ ε^i(∂_ν)`.
fn second_form_coframe(jet: &Jet) -> Matrix2<f64> {
    let n = jet.normal_components();
    let mut ii = Matrix2::zeros();
    for mu in 0..2 {
        let dc = jet.d_coframe(mu);
        for nu in 0..2 {
            ii[(mu, nu)] = n.dot(&dc.column(nu));
        }
    }
    ii
}

/// `II^s = II − Σ ε^j(Y) ω^i_j(X) N^i`, through the Levi-Civita forms.
pub fn second_form_levi_civita(jet: &Jet, w: &Connection) -> Matrix2<f64> {
    let c = jet.coframe();
    let n = jet.normal_components();
    let ii = jet.leaf.first * jet.leaf.weingarten;
    let mut out = Matrix2::zeros();
    for mu in 0..2 {
        let om = on_coordinate(w, &c, mu);
        for nu in 0..2 {
            out[(mu, nu)] = ii[(mu, nu)] - n.dot(&(om * c.column(nu)));
        }
    }
    out
}

/// The torsion density against `da` evaluated three ways.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionTwoForm {
    /// `Σ N^i dε^i(∂_a, ∂_b) / √det I`.
    pub coframe: f64,
    /// Antisymmetric part of `II^s` through the Levi-Civita forms.
    pub second_form: f64,
    /// `−Σ_cyc N^i G(N, [E_j, E_k])`.
    pub bracket: f64,
}

impl TorsionTwoForm {
    pub fn spread(&self) -> f64 {
        let v = [self.coframe, self.second_form, self.bracket];
        v.iter().fold(f64::MIN, |m, x| m.max(*x)) - v.iter().fold(f64::MAX, |m, x| m.min(*x))
    }
}

pub fn torsion_two_form(jet: &Jet, w: &Connection) -> TorsionTwoForm {
    let n = jet.normal_components();
    let da = jet.area_density();
    let (da_c, db_c) = (jet.d_coframe(0), jet.d_coframe(1));
    let coframe = (0..3).map(|i| n[i] * (da_c[(i, 1)] - db_c[(i, 0)])).sum::<f64>() / da;
    let ii = second_form_levi_civita(jet, w);
    let second_form = (ii[(0, 1)] - ii[(1, 0)]) / da;
    let bracket = -(0..3).map(|i| n[i] * jet.bracket((i + 1) % 3, (i + 2) % 3)[2]).sum::<f64>();
    TorsionTwoForm { coframe, second_form, bracket }
}

/// Residuals of `B^s = B̄ + Σ N^i (∇̄E_i)^⊤` and `H^s = H̄ − Σ G(N, ∇̄_{E_i} E_i)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonResiduals {
    pub weingarten: f64,
    pub mean: f64,
    pub h_bar: f64,
    pub h_s: f64,
}

pub fn compare_connections(jet: &Jet, w: &Connection) -> ComparisonResiduals {
    let shape = weitzenbock_shape(jet);
    let c = jet.coframe();
    let n = jet.normal_components();
    let b_bar = jet.leaf.weingarten;
    let mut rhs = b_bar;
    for mu in 0..2 {
        let v = jet.e.fixed_view::<2, 3>(0, 0) * (on_coordinate(w, &c, mu) * n);
        rhs.set_column(mu, &(rhs.column(mu) + v));
    }
    let div: f64 = (0..3).map(|i| n.dot(&w[i].column(i))).sum();
    let h_bar = b_bar.trace();
    ComparisonResiduals {
        weingarten: (shape.weingarten - rhs).amax(),
        mean: (shape.mean - (h_bar - div)).abs(),
        h_bar,
        h_s: shape.mean,
    }
}

/// `H^s + i ⋆τ^s`.
pub fn complex_mean_curvature(jet: &Jet, w: &Connection) -> Complex64 {
    Complex64::new(weitzenbock_shape(jet).mean, torsion_two_form(jet, w).coframe)
}

/// Per-node leaf report used by the drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafReport {
    pub shape: ShapeData,
    pub torsion: TorsionTwoForm,
    pub comparison: ComparisonResiduals,
}

pub fn leaf_reports(jets: &LeafJets, forms: &ConnectionOneForm) -> Vec<LeafReport> {
    jets.jets
        .par_iter()
        .zip(&forms.values)
        .map(|(j, w)| LeafReport { shape: weitzenbock_shape(j), torsion: torsion_two_form(j, w), comparison: compare_connections(j, w) })
        .collect()
}

/// Point evaluation of the Levi-Civita forms.
pub fn point_connection<P, R, M>(collar: &Collar<P>, rule: &R, metric: &M, a: f64, b: f64, r: f64) -> Result<(Jet, Connection)>
where
    P: Parametrization,
    R: FrameRule + ?Sized,
    M: CollarMetric,
{
    let jet = point_jet(collar, rule, metric, a, b, r, POINT_STEP)?;
    let w = koszul(&jet);
    Ok((jet, w))
}

/// Largest deviation of `Ω = dω + ω∧ω` from the constant-curvature form
/// `Ω^i_j = −ε^i ∧ ε^j` on frame pairs, by differences of point connections.
pub fn curvature_residual<P, R>(collar: &Collar<P>, rule: &R, a: f64, b: f64, r: f64) -> Result<f64>
where
    P: Parametrization,
    R: FrameRule + ?Sized,
{
    let metric = crate::foliation::HyperbolicCollar;
    let (jet, w) = point_connection(collar, rule, &metric, a, b, r)?;
    let h = 1e-2;
    let mut dw = [[Matrix3::zeros(); 3]; 3];
    for mu in 0..3 {
        let conn_at = |s: f64| -> Result<Connection> {
            let mut x = [a, b, r];
            x[mu] += s;
            Ok(point_connection(collar, rule, &metric, x[0], x[1], x[2])?.1)
        };
        let p = [conn_at(-2.0 * h)?, conn_at(-h)?, conn_at(h)?, conn_at(2.0 * h)?];
        for l in 0..3 {
            dw[mu][l] = ((p[0][l] - p[3][l]) + (p[2][l] - p[1][l]) * 8.0) / (12.0 * h);
        }
    }
    let c = jet.coframe();
    let mut worst: f64 = 0.0;
    for k in 0..3 {
        for l in 0..3 {
            let along = |x: usize, f: usize| (0..3).fold(Matrix3::zeros(), |acc, mu| acc + dw[mu][f] * jet.e[(mu, x)]);
            let br = c * jet.bracket(k, l);
            let w_br = w[0] * br[0] + w[1] * br[1] + w[2] * br[2];
            let omega = along(k, l) - along(l, k) - w_br + w[k] * w[l] - w[l] * w[k];
            let mut want = Matrix3::zeros();
            if k != l {
                want[(k, l)] = -1.0;
                want[(l, k)] = 1.0;
            }
            worst = worst.max((omega - want).amax());
        }
    }
    Ok(worst)
}

/// Pointwise `(d_a, d_b)` derivative of a scalar field sampled at a point, used by tests.
pub fn scalar_gradient(f: impl Fn(f64, f64) -> f64, a: f64, b: f64, h: f64) -> [f64; 2] {
    [d1(|s| f(a + s, b), h), d1(|s| f(a, b + s), h)]
}
