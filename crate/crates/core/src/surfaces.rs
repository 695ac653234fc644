//! Parametrized surfaces, fundamental forms and surface quadrature.
//!
//! `B` is the Weingarten map in the sign convention where convex surfaces,
//! oriented toward the conformal boundary, have `B ≤ 0`:
//! `I(B X, Y) = I(N, ∇̄_X Y)`.

use crate::error::{GeomError, Result};
use crate::hypgeom::{christoffel, fermi_basis, fermi_point, inner, normal_flow, FermiChart, HyperbolicPoint, TangentVector3};
use crate::numerics::{d1, d2, Axis, Differentiator, Grid2};
use nalgebra::{Matrix2, Vector3};
use rayon::prelude::*;
use std::f64::consts::PI;

const FD_FIRST: f64 = 1e-3;
const FD_SECOND: f64 = 2e-3;

/// Smooth map from chart coordinates `(a, b)` into the upper half-space.
pub trait Parametrization: Sync + Send {
    fn point(&self, a: f64, b: f64) -> HyperbolicPoint;

    /// Sampling axes of the natural chart domain.
    fn axes(&self, n1: usize, n2: usize) -> [Axis; 2];

    /// `(∂_a X, ∂_b X)`; defaults to fourth-order differences of [`Self::point`].
    fn tangents(&self, a: f64, b: f64) -> [Vector3<f64>; 2] {
        [
            d1(|h| self.point(a + h, b).coords(), FD_FIRST),
            d1(|h| self.point(a, b + h).coords(), FD_FIRST),
        ]
    }

    /// `(∂_aa X, ∂_ab X, ∂_bb X)`.
    fn second(&self, a: f64, b: f64) -> [Vector3<f64>; 3] {
        [
            d2(|h| self.point(a + h, b).coords(), FD_SECOND),
            d1(|h| d1(|k| self.point(a + h, b + k).coords(), FD_SECOND), FD_SECOND),
            d2(|h| self.point(a, b + h).coords(), FD_SECOND),
        ]
    }
}

/// Which side the unit normal points to relative to `∂_a X × ∂_b X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `N` along `∂_a X × ∂_b X`.
    Positive,
    /// `N` along `−∂_a X × ∂_b X`.
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// Pointwise surface data at one chart node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeForms {
    pub a: f64,
    pub b: f64,
    pub point: HyperbolicPoint,
    pub tangents: [Vector3<f64>; 2],
    /// Unit normal in coordinate components.
    pub normal: Vector3<f64>,
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    pub weingarten: Matrix2<f64>,
}

/// First and second fundamental forms from embedding derivatives.
pub fn node_forms_from(
    a: f64,
    b: f64,
    p: HyperbolicPoint,
    tangents: [Vector3<f64>; 2],
    second: [Vector3<f64>; 3],
    orientation: Orientation,
) -> Result<NodeForms> {
    let [xa, xb] = tangents;
    let first = Matrix2::new(inner(&p, &xa, &xa), inner(&p, &xa, &xb), inner(&p, &xb, &xa), inner(&p, &xb, &xb));
    let cross = xa.cross(&xb);
    if first.determinant() <= 1e-24 || cross.norm() == 0.0 {
        return Err(GeomError::Degenerate(format!("chart is not immersed at ({a}, {b})")));
    }
    let normal = cross.normalize() * (p.t * orientation.sign());
    let hess = |x: &Vector3<f64>, y: &Vector3<f64>, xy: &Vector3<f64>| inner(&p, &normal, &(xy + christoffel(&p, x, y)));
    let s_ab = hess(&xa, &xb, &second[1]);
    let ii = Matrix2::new(hess(&xa, &xa, &second[0]), s_ab, s_ab, hess(&xb, &xb, &second[2]));
    let inv = first.try_inverse().ok_or_else(|| GeomError::Degenerate("first fundamental form".into()))?;
    Ok(NodeForms { a, b, point: p, tangents, normal, first, second: ii, weingarten: inv * ii })
}

pub fn node_forms<P: Parametrization + ?Sized>(param: &P, a: f64, b: f64, orientation: Orientation) -> Result<NodeForms> {
    node_forms_from(a, b, param.point(a, b), param.tangents(a, b), param.second(a, b), orientation)
}

/// Sampled chart: embedding and derivatives at every grid node.
#[derive(Clone, Debug)]
pub struct SurfaceChart {
    pub grid: Grid2,
    pub points: Vec<HyperbolicPoint>,
    pub tangents: Vec<[Vector3<f64>; 2]>,
    pub seconds: Vec<[Vector3<f64>; 3]>,
}

impl SurfaceChart {
    pub fn sample<P: Parametrization + ?Sized>(param: &P, n1: usize, n2: usize) -> Result<Self> {
        let [ax, bx] = param.axes(n1, n2);
        let grid = Grid2::new(ax, bx)?;
        let coords = grid.all_coords();
        let data: Vec<_> = coords
            .par_iter()
            .map(|&(a, b)| (param.point(a, b), param.tangents(a, b), param.second(a, b)))
            .collect();
        let chart = Self {
            grid,
            points: data.iter().map(|d| d.0).collect(),
            tangents: data.iter().map(|d| d.1).collect(),
            seconds: data.iter().map(|d| d.2).collect(),
        };
        for (k, t) in chart.tangents.iter().enumerate() {
            if t[0].cross(&t[1]).norm() <= 1e-14 * t[0].norm().max(t[1].norm()).powi(2) {
                let (a, b) = chart.grid.coords(k);
                return Err(GeomError::Degenerate(format!("tangent basis has rank < 2 at ({a}, {b})")));
            }
        }
        Ok(chart)
    }
}

/// Per-node leaf data.
#[derive(Clone, Debug)]
pub struct LeafGeometry {
    pub grid: Grid2,
    pub first: Vec<Matrix2<f64>>,
    pub weingarten: Vec<Matrix2<f64>>,
    pub k_int: Vec<f64>,
    pub da: Vec<f64>,
}

impl LeafGeometry {
    /// Assembles leaf data; intrinsic curvature comes from the metric alone.
    pub fn from_forms(grid: Grid2, first: Vec<Matrix2<f64>>, weingarten: Vec<Matrix2<f64>>) -> Result<Self> {
        if first.len() != grid.len() || weingarten.len() != grid.len() {
            return Err(GeomError::GridMismatch("leaf data length".into()));
        }
        let k_int = brioschi(&grid, &first)?;
        let da = first.iter().map(|m| m.determinant().sqrt()).collect();
        Ok(Self { grid, first, weingarten, k_int, da })
    }

    pub fn mean_curvature(&self) -> Vec<f64> {
        self.weingarten.iter().map(|b| b.trace()).collect()
    }

    /// Max of `|det B − 1 − K_int|`.
    pub fn gauss_residual(&self) -> f64 {
        self.weingarten.iter().zip(&self.k_int).map(|(b, k)| (b.determinant() - 1.0 - k).abs()).fold(0.0, f64::max)
    }

    /// Max of `|I B − (I B)ᵀ|`.
    pub fn self_adjoint_residual(&self) -> f64 {
        self.first.iter().zip(&self.weingarten).map(|(i, b)| (i * b - (i * b).transpose()).amax()).fold(0.0, f64::max)
    }

    /// Real eigenvalues of `B` at node `k`, ascending.
    pub fn principal_curvatures(&self, k: usize) -> [f64; 2] {
        eigen2(&self.weingarten[k])
    }
}

/// Ascending eigenvalues of a 2×2 matrix with real spectrum.
pub fn eigen2(m: &Matrix2<f64>) -> [f64; 2] {
    let half = 0.5 * m.trace();
    let disc = (half * half - m.determinant()).max(0.0).sqrt();
    [half - disc, half + disc]
}

/// Gaussian curvature of the metric field `first` by the Brioschi formula.
pub fn brioschi(grid: &Grid2, first: &[Matrix2<f64>]) -> Result<Vec<f64>> {
    if first.len() != grid.len() {
        return Err(GeomError::GridMismatch("metric length".into()));
    }
    let d = Differentiator::new(grid);
    let e: Vec<f64> = first.iter().map(|m| m[(0, 0)]).collect();
    let f: Vec<f64> = first.iter().map(|m| m[(0, 1)]).collect();
    let g: Vec<f64> = first.iter().map(|m| m[(1, 1)]).collect();
    let (eu, ev) = (d.d(&e, 0), d.d(&e, 1));
    let (fu, fv) = (d.d(&f, 0), d.d(&f, 1));
    let (gu, gv) = (d.d(&g, 0), d.d(&g, 1));
    let evv = d.d(&ev, 1);
    let guu = d.d(&gu, 0);
    let fuv = d.d(&fu, 1);
    Ok((0..grid.len())
        .map(|k| {
            let m1 = nalgebra::Matrix3::new(
                -0.5 * evv[k] + fuv[k] - 0.5 * guu[k],
                0.5 * eu[k],
                fu[k] - 0.5 * ev[k],
                fv[k] - 0.5 * gu[k],
                e[k],
                f[k],
                0.5 * gv[k],
                f[k],
                g[k],
            );
            let m2 = nalgebra::Matrix3::new(0.0, 0.5 * ev[k], 0.5 * gu[k], 0.5 * ev[k], e[k], f[k], 0.5 * gu[k], f[k], g[k]);
            let w = e[k] * g[k] - f[k] * f[k];
            (m1.determinant() - m2.determinant()) / (w * w)
        })
        .collect())
}

/// Fundamental forms at every node of a sampled chart.
pub fn fundamental_forms(chart: &SurfaceChart, orientation: Orientation) -> Result<LeafGeometry> {
    let forms: Result<Vec<NodeForms>> = (0..chart.grid.len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = chart.grid.coords(k);
            node_forms_from(a, b, chart.points[k], chart.tangents[k], chart.seconds[k], orientation)
        })
        .collect();
    let forms = forms?;
    LeafGeometry::from_forms(
        chart.grid.clone(),
        forms.iter().map(|f| f.first).collect(),
        forms.iter().map(|f| f.weingarten).collect(),
    )
}

/// True iff every principal curvature is at most `tol`.
pub fn check_convexity(geom: &LeafGeometry, tol: f64) -> bool {
    (0..geom.grid.len()).all(|k| geom.principal_curvatures(k)[1] <= tol)
}

/// `∫ density da` by the grid's tensor rule.
pub fn integrate_surface(density: &[f64], geom: &LeafGeometry) -> Result<f64> {
    if density.len() != geom.da.len() {
        return Err(GeomError::GridMismatch(format!("{} densities for {} nodes", density.len(), geom.da.len())));
    }
    let weighted: Vec<f64> = density.iter().zip(&geom.da).map(|(f, a)| f * a).collect();
    geom.grid.integrate(&weighted)
}

/// Equidistant tube of radius `u0` about the core geodesic, in chart
/// coordinates `(s, θ')` with `θ = θ' + twist·s/L`, so both axes are periodic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TubeSurface {
    pub u0: f64,
    pub chart: FermiChart,
}

impl TubeSurface {
    pub fn new(u0: f64, chart: FermiChart) -> Result<Self> {
        if !(u0 > 0.0) {
            return Err(GeomError::Domain(format!("tube radius must be positive, got {u0}")));
        }
        Ok(Self { u0, chart })
    }

    fn slope(&self) -> f64 {
        self.chart.twist / self.chart.length
    }

    pub fn theta(&self, a: f64, b: f64) -> f64 {
        b + self.slope() * a
    }
}

impl Parametrization for TubeSurface {
    fn point(&self, a: f64, b: f64) -> HyperbolicPoint {
        fermi_point(self.u0, a, self.theta(a, b))
    }

    fn axes(&self, n1: usize, n2: usize) -> [Axis; 2] {
        [Axis::periodic(self.chart.length, n1), Axis::periodic(2.0 * PI, n2)]
    }

    fn tangents(&self, a: f64, b: f64) -> [Vector3<f64>; 2] {
        let basis = fermi_basis(self.u0, a, self.theta(a, b));
        let (ds, dth) = (basis.column(1).into_owned(), basis.column(2).into_owned());
        [ds + dth * self.slope(), dth]
    }

    fn second(&self, a: f64, b: f64) -> [Vector3<f64>; 3] {
        let th = self.theta(a, b);
        let basis = fermi_basis(self.u0, a, th);
        let p = self.point(a, b).coords();
        let d_th = basis.column(2).into_owned();
        let es_t = a.exp() * self.u0.tanh();
        let d_thth = Vector3::new(-es_t * th.cos(), es_t * th.sin(), 0.0);
        let k = self.slope();
        [p + d_th * (2.0 * k) + d_thth * (k * k), d_th + d_thth * k, d_thth]
    }
}

/// Totally geodesic vertical plane `x2 = 0` with coordinates `(s, y)`,
/// `s` periodic under the dilation by `e^L` and `y ∈ [−half_width, half_width]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerticalPlaneStrip {
    pub length: f64,
    pub half_width: f64,
}

impl Parametrization for VerticalPlaneStrip {
    fn point(&self, a: f64, b: f64) -> HyperbolicPoint {
        let es = a.exp();
        HyperbolicPoint { x1: es * b.tanh(), x2: 0.0, t: es / b.cosh() }
    }

    fn axes(&self, n1: usize, n2: usize) -> [Axis; 2] {
        [Axis::periodic(self.length, n1), Axis::bounded(-self.half_width, 2.0 * self.half_width, n2)]
    }
}

/// Graph `t = f(x1, x2)` over the square `[−h, h]²`.
pub struct GraphSurface<F: Fn(f64, f64) -> f64 + Sync + Send> {
    pub f: F,
    pub half_width: f64,
}

impl<F: Fn(f64, f64) -> f64 + Sync + Send> Parametrization for GraphSurface<F> {
    fn point(&self, a: f64, b: f64) -> HyperbolicPoint {
        HyperbolicPoint { x1: a, x2: b, t: (self.f)(a, b) }
    }

    fn axes(&self, n1: usize, n2: usize) -> [Axis; 2] {
        let w = 2.0 * self.half_width;
        [Axis::bounded(-self.half_width, w, n1), Axis::bounded(-self.half_width, w, n2)]
    }
}

/// The surface reached by flowing a base surface a distance `r` along its unit normal.
pub struct FlowedSurface<'a, P: Parametrization + ?Sized> {
    pub base: &'a P,
    pub orientation: Orientation,
    pub r: f64,
}

impl<P: Parametrization + ?Sized> Parametrization for FlowedSurface<'_, P> {
    fn point(&self, a: f64, b: f64) -> HyperbolicPoint {
        let p = self.base.point(a, b);
        let [xa, xb] = self.base.tangents(a, b);
        let n = xa.cross(&xb).normalize() * (p.t * self.orientation.sign());
        normal_flow(&p, &TangentVector3::new(p, n), self.r).expect("unit normal flow").point
    }

    fn axes(&self, n1: usize, n2: usize) -> [Axis; 2] {
        self.base.axes(n1, n2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tube(u0: f64, l: f64, twist: f64) -> TubeSurface {
        TubeSurface::new(u0, FermiChart::new(l, twist).unwrap()).unwrap()
    }

    #[test]
    fn tube_principal_curvatures() {
        let t = tube(1.0, 2.0, 0.0);
        let chart = SurfaceChart::sample(&t, 16, 16).unwrap();
        let geom = fundamental_forms(&chart, Orientation::Positive).unwrap();
        for k in 0..geom.grid.len() {
            let [lo, hi] = geom.principal_curvatures(k);
            assert_relative_eq!(lo, -1.31304, epsilon = 1e-5);
            assert_relative_eq!(hi, -0.76159, epsilon = 1e-5);
        }
        assert!(geom.gauss_residual() < 1e-9);
        assert!(geom.self_adjoint_residual() < 1e-10);
        assert!(check_convexity(&geom, 1e-12));
        let flipped = fundamental_forms(&chart, Orientation::Negative).unwrap();
        assert!(!check_convexity(&flipped, 1e-12));
    }

    #[test]
    fn twisted_tube_chart_agrees_with_fd_derivatives() {
        let t = tube(0.8, 1.5, 0.6);
        let (a, b) = (0.3, 1.9);
        let exact = (t.tangents(a, b), t.second(a, b));
        let fd = (
            [d1(|h| t.point(a + h, b).coords(), 1e-3), d1(|h| t.point(a, b + h).coords(), 1e-3)],
            [d2(|h| t.point(a + h, b).coords(), 2e-3), d1(|h| d1(|k| t.point(a + h, b + k).coords(), 2e-3), 2e-3), d2(|h| t.point(a, b + h).coords(), 2e-3)],
        );
        for i in 0..2 {
            assert_relative_eq!(exact.0[i], fd.0[i], epsilon = 1e-10);
        }
        for i in 0..3 {
            assert_relative_eq!(exact.1[i], fd.1[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn area_and_mean_curvature_integrals() {
        let t = tube(1.0, 2.0, 0.0);
        let geom = fundamental_forms(&SurfaceChart::sample(&t, 32, 32).unwrap(), Orientation::Positive).unwrap();
        let ones = vec![1.0; geom.grid.len()];
        let (sh, ch) = (1f64.sinh(), 1f64.cosh());
        assert_relative_eq!(integrate_surface(&ones, &geom).unwrap(), 4.0 * PI * sh * ch, epsilon = 1e-10);
        assert_relative_eq!(integrate_surface(&geom.mean_curvature(), &geom).unwrap(), -4.0 * PI * (sh * sh + ch * ch), epsilon = 1e-9);
        assert_eq!(integrate_surface(&vec![0.0; geom.grid.len()], &geom).unwrap(), 0.0);
        assert!(integrate_surface(&[1.0], &geom).is_err());
    }

    #[test]
    fn vertical_plane_is_totally_geodesic() {
        let strip = VerticalPlaneStrip { length: 1.0, half_width: 1.0 };
        let geom = fundamental_forms(&SurfaceChart::sample(&strip, 16, 33).unwrap(), Orientation::Positive).unwrap();
        assert!(geom.weingarten.iter().all(|b| b.amax() < 1e-8));
        assert!(check_convexity(&geom, 1e-8));
        // Intrinsic curvature of dy² + cosh²y ds² is −1.
        let e = geom.k_int.iter().map(|k| (k + 1.0).abs()).fold(0.0, f64::max);
        assert!(e < 1e-7, "{e:e}");
    }
}
