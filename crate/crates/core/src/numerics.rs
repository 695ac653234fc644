//! Grids, differentiation backends and quadrature rules.
//!
//! Periodic axes use FFT differentiation and the trapezoid rule; bounded axes use
//! Chebyshev-Lobatto collocation and Clenshaw-Curtis weights. Both are spectral.

use crate::error::{GeomError, Result};
use gauss_quad::legendre::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub length: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn periodic(length: f64, n: usize) -> Self {
        Self { start: 0.0, length, n, periodic: true }
    }

    /// Closed interval `[start, start + length]` sampled at `n` Chebyshev-Lobatto nodes.
    pub fn bounded(start: f64, length: f64, n: usize) -> Self {
        Self { start, length, n, periodic: false }
    }

    /// Node spacing of a periodic axis; the smallest spacing of a bounded one.
    pub fn step(&self) -> f64 {
        if self.periodic {
            self.length / self.n as f64
        } else {
            self.node(1) - self.node(0)
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if self.periodic {
            self.start + self.length * i as f64 / self.n as f64
        } else {
            let c = (std::f64::consts::PI * i as f64 / (self.n - 1) as f64).cos();
            self.start + 0.5 * self.length * (1.0 - c)
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Trapezoid weights on periodic axes, Clenshaw-Curtis weights on bounded ones.
    pub fn weights(&self) -> Result<Vec<f64>> {
        if self.periodic {
            return Ok(vec![self.step(); self.n]);
        }
        let big_n = self.n - 1;
        let nf = big_n as f64;
        let mut w = vec![0.0; self.n];
        let end = if big_n % 2 == 0 { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
        w[0] = end;
        w[big_n] = end;
        for (i, wi) in w.iter_mut().enumerate().take(big_n).skip(1) {
            let th = std::f64::consts::PI * i as f64 / nf;
            let mut v = 1.0;
            for k in 1..=(big_n - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * (2.0 * kf * th).cos() / (4.0 * kf * kf - 1.0);
            }
            if big_n % 2 == 0 {
                v -= (nf * th).cos() / (nf * nf - 1.0);
            }
            *wi = 2.0 * v / nf;
        }
        Ok(w.into_iter().map(|x| x * 0.5 * self.length).collect())
    }

    /// Dense differentiation matrix of the bounded node set (barycentric form).
    fn cheb_matrix(&self) -> DMatrix<f64> {
        let x = self.nodes();
        let n = self.n;
        let bw: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = bw[j] / bw[i] / (x[i] - x[j]);
                    d[(i, j)] = v;
                    diag -= v;
                }
            }
            d[(i, i)] = diag;
        }
        d
    }

    fn validate(&self) -> Result<()> {
        let min = if self.periodic { 4 } else { 3 };
        if self.n < min || !(self.length > 0.0) {
            return Err(GeomError::GridMismatch(format!("axis needs n >= {min} and positive length")));
        }
        Ok(())
    }
}

/// Tensor grid; node `(i, j)` is stored at `i * n2 + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid2 {
    pub axes: [Axis; 2],
}

impl Grid2 {
    pub fn new(a: Axis, b: Axis) -> Result<Self> {
        a.validate()?;
        b.validate()?;
        Ok(Self { axes: [a, b] })
    }

    pub fn len(&self) -> usize {
        self.axes[0].n * self.axes[1].n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.axes[1].n + j
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let n2 = self.axes[1].n;
        (self.axes[0].node(k / n2), self.axes[1].node(k % n2))
    }

    pub fn all_coords(&self) -> Vec<(f64, f64)> {
        (0..self.len()).map(|k| self.coords(k)).collect()
    }

    /// Tensor quadrature weights for `∫ f da db`.
    pub fn weights(&self) -> Result<Vec<f64>> {
        let wa = self.axes[0].weights()?;
        let wb = self.axes[1].weights()?;
        Ok((0..self.len()).map(|k| wa[k / self.axes[1].n] * wb[k % self.axes[1].n]).collect())
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(GeomError::GridMismatch(format!("{} values on a grid of {}", values.len(), self.len())));
        }
        Ok(self.weights()?.iter().zip(values).map(|(w, v)| w * v).sum())
    }
}

/// Differentiation along the axes of a [`Grid2`].
#[derive(Clone)]
pub struct Differentiator {
    grid: Grid2,
    plans: [Backend; 2],
}

#[derive(Clone)]
enum Backend {
    Fourier(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    Chebyshev(DMatrix<f64>),
}

impl std::fmt::Debug for Differentiator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Differentiator").field("grid", &self.grid).finish()
    }
}

impl Differentiator {
    pub fn new(grid: &Grid2) -> Self {
        let mut planner = FftPlanner::new();
        let mut plan = |ax: &Axis| {
            if ax.periodic {
                Backend::Fourier(planner.plan_fft_forward(ax.n), planner.plan_fft_inverse(ax.n))
            } else {
                Backend::Chebyshev(ax.cheb_matrix())
            }
        };
        let plans = [plan(&grid.axes[0]), plan(&grid.axes[1])];
        Self { grid: grid.clone(), plans }
    }

    pub fn grid(&self) -> &Grid2 {
        &self.grid
    }

    /// First derivative of grid data along `axis`.
    pub fn d(&self, data: &[f64], axis: usize) -> Vec<f64> {
        assert_eq!(data.len(), self.grid.len(), "grid data length");
        let [n1, n2] = [self.grid.axes[0].n, self.grid.axes[1].n];
        let ax = self.grid.axes[axis];
        let (count, len, stride_line, stride_elem) = if axis == 0 { (n2, n1, 1, n2) } else { (n1, n2, n2, 1) };
        let mut out = vec![0.0; data.len()];
        let mut line = vec![0.0; len];
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for l in 0..count {
            for (m, v) in line.iter_mut().enumerate() {
                *v = data[l * stride_line + m * stride_elem];
            }
            let res = match &self.plans[axis] {
                Backend::Fourier(fwd, inv) => spectral_line(&line, ax.length, fwd.as_ref(), inv.as_ref(), &mut buf),
                Backend::Chebyshev(m) => (m * DVector::from_column_slice(&line)).iter().copied().collect(),
            };
            for (m, v) in res.into_iter().enumerate() {
                out[l * stride_line + m * stride_elem] = v;
            }
        }
        out
    }
}

fn spectral_line(line: &[f64], period: f64, fwd: &dyn Fft<f64>, inv: &dyn Fft<f64>, buf: &mut [Complex64]) -> Vec<f64> {
    let n = line.len();
    for (b, &v) in buf.iter_mut().zip(line) {
        *b = Complex64::new(v, 0.0);
    }
    fwd.process(buf);
    let base = 2.0 * std::f64::consts::PI / period;
    for (m, b) in buf.iter_mut().enumerate() {
        let k = if 2 * m < n {
            m as f64
        } else if 2 * m == n {
            0.0
        } else {
            m as f64 - n as f64
        };
        *b *= Complex64::new(0.0, base * k);
    }
    inv.process(buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// Fourth-order central derivative of `f` at offset zero.
pub fn d1<T, F>(f: F, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    ((f(-2.0 * h) - f(2.0 * h)) + (f(h) - f(-h)) * 8.0) * (1.0 / (12.0 * h))
}

/// Fourth-order central second derivative of `f` at offset zero.
pub fn d2<T, F>(f: F, h: f64) -> T
where
    F: Fn(f64) -> T,
    T: Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let c = f(0.0);
    ((f(h) + f(-h)) * 16.0 - (f(2.0 * h) + f(-2.0 * h)) - c * 30.0) * (1.0 / (12.0 * h * h))
}

/// Radial sampling `ρ_k = k·Δ` with Gauss-Legendre nodes inside every interval.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialRule {
    pub samples: Vec<f64>,
    /// `(interval index, radius, weight)`.
    pub nodes: Vec<(usize, f64, f64)>,
}

impl RadialRule {
    pub fn new(r_max: f64, intervals: usize, per_interval: usize) -> Result<Self> {
        if intervals == 0 || !(r_max > 0.0) {
            return Err(GeomError::Domain("radial rule needs positive r_max and at least one interval".into()));
        }
        let rule = GaussLegendre::new(per_interval.max(2)).map_err(|e| GeomError::Domain(e.to_string()))?;
        let dr = r_max / intervals as f64;
        let samples: Vec<f64> = (0..=intervals).map(|k| k as f64 * dr).collect();
        let mut nodes = Vec::new();
        for k in 0..intervals {
            let (a, b) = (samples[k], samples[k + 1]);
            let mut pts: Vec<(f64, f64)> = rule.iter().map(|&(x, w)| (0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w)).collect();
            pts.sort_by(|p, q| p.0.total_cmp(&q.0));
            nodes.extend(pts.into_iter().map(|(r, w)| (k, r, w)));
        }
        Ok(Self { samples, nodes })
    }

    /// Cumulative integrals `∫_0^{ρ_k}` from values at [`Self::nodes`].
    pub fn cumulative(&self, values: &[f64]) -> Vec<f64> {
        let mut per = vec![0.0; self.samples.len() - 1];
        for ((k, _, w), v) in self.nodes.iter().zip(values) {
            per[*k] += w * v;
        }
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for p in per {
            acc += p;
            out.push(acc);
        }
        out
    }
}

/// Least-squares coefficients of `y ≈ Σ c_j basis_j(x)`.
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<Vec<f64>> {
    let a = DMatrix::from_fn(xs.len(), basis.len(), |i, j| basis[j](xs[i]));
    let y = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let sol = svd.solve(&y, 1e-14).map_err(|e| GeomError::Degenerate(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}
