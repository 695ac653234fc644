//! Renormalized collar integrals on tube scenarios.
//!
//! The SO(3) series is `F(ρ) = ∫_{[S,S_ρ]} cs + e^ρ/(4√2π²) ∫ τ(s∞) da∞`; the
//! PSL₂(ℂ) series is `F(ρ) = core + 4iπ²∫_{[S,S_ρ]} σ*cs + e^ρ/(4√2) ∫(H(s∞) + iτ(s∞)) da∞ + πρχ`.
//! The core of a tube scenario is the solid tube of radius `u₀`: its volume is
//! `πL sinh²u₀`, its SO(3) contribution is taken to be zero and its PSL₂(ℂ)
//! contribution is `Vol(C) + ¼∫_S (H̄ − H^s) da`.

use crate::cartan::{levi_civita_forms, leaf_reports, LeafJets};
use crate::chernsimons::{gauge_jet, pairing, psl2_density_with_step, so3_cs_pullback, PSL_STEP};
use crate::error::{GeomError, Result};
use crate::foliation::{propagate, Collar, HyperbolicCollar, WarpedModel};
use crate::frames::{fermi_frame, tilted_frame, twisted_frame, verify_constant, AtInfinity, Constant, FrameField, FrameRule, Twist};
use crate::hypgeom::FermiChart;
use crate::cartan::l_basis;
use crate::numerics::{least_squares, Differentiator, Grid2, RadialRule};
use crate::surfaces::{fundamental_forms, integrate_surface, LeafGeometry, Orientation, Parametrization, SurfaceChart, TubeSurface};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

/// Frame family of a tube scenario.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FrameKind {
    Fermi,
    Twisted { n_s: f64, n_theta: f64 },
    Tilted { beta: f64, n_s: f64, n_theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TubeScenario {
    pub u0: f64,
    pub length: f64,
    pub twist: f64,
    pub frame: FrameKind,
    pub n1: usize,
    pub n2: usize,
    pub r_max: f64,
    pub intervals: usize,
    pub per_interval: usize,
    /// Finite-difference step of the developing-map pipeline.
    pub fd_step: f64,
}

impl Default for TubeScenario {
    fn default() -> Self {
        Self { u0: 1.0, length: 2.0, twist: 0.0, frame: FrameKind::Fermi, n1: 64, n2: 64, r_max: 4.0, intervals: 16, per_interval: 4, fd_step: PSL_STEP }
    }
}

impl TubeScenario {
    pub fn rule(&self) -> Box<dyn FrameRule> {
        let tw = |n_s, n_theta| Twist { n_s, n_theta, length: self.length };
        match self.frame {
            FrameKind::Fermi => fermi_frame(),
            FrameKind::Twisted { n_s, n_theta } => twisted_frame(tw(n_s, n_theta)),
            FrameKind::Tilted { beta, n_s, n_theta } => tilted_frame(beta, tw(n_s, n_theta)),
        }
    }

    pub fn core_volume(&self) -> f64 {
        PI * self.length * self.u0.sinh().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u0 > 0.0) || !(self.length > 0.0) || self.n1 < 16 || self.n2 < 16 || self.intervals < 3 || !(self.r_max > 0.0) || !(self.fd_step > 0.0 && self.fd_step < 0.1) || self.per_interval < 2 {
            return Err(GeomError::Domain("tube scenario needs u0 > 0, L > 0, N1, N2 >= 16, r_max > 0, >= 3 radial intervals, >= 2 nodes per interval and 0 < fd_step < 0.1".into()));
        }
        Ok(())
    }
}

/// Shared base data of a scenario run.
pub struct Prepared {
    pub scenario: TubeScenario,
    pub collar: Collar<TubeSurface>,
    pub diff: Differentiator,
    pub base: Vec<crate::foliation::BasePoint>,
    pub geom: LeafGeometry,
    pub radial: RadialRule,
    pub rule: Box<dyn FrameRule>,
}

impl Prepared {
    pub fn new(scenario: TubeScenario) -> Result<Self> {
        Self::with_rule(scenario.clone(), scenario.rule())
    }

    /// Uses `rule` in place of the scenario's frame family.
    pub fn with_rule(scenario: TubeScenario, rule: Box<dyn FrameRule>) -> Result<Self> {
        scenario.validate()?;
        let surface = TubeSurface::new(scenario.u0, FermiChart::new(scenario.length, scenario.twist)?)?;
        let [a, b] = surface.axes(scenario.n1, scenario.n2);
        let grid = Grid2::new(a, b)?;
        let geom = fundamental_forms(&SurfaceChart::sample(&surface, scenario.n1, scenario.n2)?, Orientation::Positive)?;
        let collar = Collar::new(surface, Orientation::Positive);
        let base = collar.base_points(&grid)?;
        let radial = RadialRule::new(scenario.r_max, scenario.intervals, scenario.per_interval)?;
        Ok(Self { scenario, collar, diff: Differentiator::new(&grid), base, geom, radial, rule })
    }

    pub fn grid(&self) -> &Grid2 {
        self.diff.grid()
    }

    fn jets(&self, r: f64) -> Result<LeafJets> {
        LeafJets::compute(&self.base, &self.diff, &self.rule, &HyperbolicCollar, r)
    }

    /// Jets of the frame at infinity on the warped model at `r`, built from the
    /// frame on the outermost sampled leaf.
    fn infinity_jets(&self, r: f64) -> Result<LeafJets> {
        let outer = Constant { base: &self.rule, from: self.scenario.r_max };
        LeafJets::compute(&self.base, &self.diff, &AtInfinity { base: outer }, &WarpedModel, r)
    }
}

/// Sampled series with its divergent correction.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticSeries {
    pub rho: Vec<f64>,
    pub raw: Vec<Complex64>,
    pub divergent: Vec<Complex64>,
    pub corrected: Vec<Complex64>,
    pub limit: Complex64,
    pub slope: Option<f64>,
}

impl AsymptoticSeries {
    pub fn new(rho: Vec<f64>, raw: Vec<Complex64>, divergent: Vec<Complex64>) -> Result<Self> {
        if rho.windows(2).any(|w| w[1] <= w[0]) || rho.len() != raw.len() || raw.len() != divergent.len() {
            return Err(GeomError::Domain("series samples must be increasing and aligned".into()));
        }
        let corrected: Vec<Complex64> = raw.iter().zip(&divergent).map(|(a, b)| a + b).collect();
        let limit = richardson(&rho, &corrected)?;
        let slope = decay_slope(&rho, &corrected);
        Ok(Self { rho, raw, divergent, corrected, limit, slope })
    }

    /// `|F(ρ_{k+1}) − F(ρ_k)|`.
    pub fn increments(&self) -> Vec<f64> {
        self.corrected.windows(2).map(|w| (w[1] - w[0]).norm()).collect()
    }
}

/// Limit of `F∞ + c₁e^{−ρ} + c₂e^{−2ρ}` through the last three samples.
pub fn richardson(rho: &[f64], f: &[Complex64]) -> Result<Complex64> {
    let n = rho.len();
    if n < 3 {
        return Err(GeomError::Convergence("Richardson needs three samples".into()));
    }
    let m = nalgebra::Matrix3::from_fn(|i, j| (-(j as f64) * rho[n - 3 + i]).exp());
    let inv = m.try_inverse().ok_or_else(|| GeomError::Convergence("singular extrapolation system".into()))?;
    let row = inv.row(0);
    Ok((0..3).map(|i| f[n - 3 + i] * row[i]).sum())
}

/// Relative noise floor below which increments are not used for slopes.
pub const NOISE_FLOOR: f64 = 1e-11;

/// Slope of `log|F(ρ_{k+1}) − F(ρ_k)|` against `ρ_k`; `None` when fewer than three
/// increments rise above the noise floor.
pub fn decay_slope(rho: &[f64], f: &[Complex64]) -> Option<f64> {
    let scale = f.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let pts: Vec<(f64, f64)> = f
        .windows(2)
        .zip(rho)
        .filter_map(|(w, &r)| {
            let d = (w[1] - w[0]).norm();
            (d > NOISE_FLOOR * scale).then(|| (r, d.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `e^ρ` coefficient of a least-squares fit on `[e^ρ, 1, ρ, e^{−ρ}]`.
pub fn exp_coefficient(rho: &[f64], y: &[f64]) -> Result<f64> {
    let basis: [&dyn Fn(f64) -> f64; 4] = [&|r: f64| r.exp(), &|_| 1.0, &|r| r, &|r: f64| (-r).exp()];
    Ok(least_squares(rho, y, &basis)?[0])
}

/// `χ = (1/2π) ∫ K_int da` and its nearest integer.
pub fn euler_characteristic(geom: &LeafGeometry) -> Result<(f64, i64)> {
    let raw = integrate_surface(&geom.k_int, geom)? / (2.0 * PI);
    Ok((raw, raw.round() as i64))
}

/// Leading coefficients from the frame at infinity on `W` at `r = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfinityIntegrals {
    pub tau: f64,
    pub mean: f64,
    /// `∫ Σ_cyc I_W(∂_r, E_i∞) I_W(∂_r, [E_j∞, E_k∞]) da∞`.
    pub bracket_sum: f64,
    pub torsion_spread: f64,
}

pub fn infinity_integrals(p: &Prepared) -> Result<InfinityIntegrals> {
    let jets = p.infinity_jets(0.0)?;
    let reps = leaf_reports(&jets, &levi_civita_forms(&jets));
    let tau: Vec<f64> = reps.iter().map(|r| r.torsion.coframe).collect();
    let mean: Vec<f64> = reps.iter().map(|r| r.shape.mean).collect();
    let bracket: Vec<f64> = reps.iter().map(|r| -r.torsion.bracket).collect();
    Ok(InfinityIntegrals {
        tau: jets.integrate(&tau)?,
        mean: jets.integrate(&mean)?,
        bracket_sum: jets.integrate(&bracket)?,
        torsion_spread: reps.iter().map(|r| r.torsion.spread()).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct So3Result {
    pub series: AsymptoticSeries,
    pub cs_r: f64,
    pub tau_inf: f64,
    /// Fitted `e^ρ` coefficient of the raw series.
    pub raw_exp_coefficient: f64,
    /// `−∫τ(s∞) / (4√2π²)`.
    pub expected_exp_coefficient: f64,
    pub constancy: f64,
}

/// Tolerance on the constant-frame check before renormalizing.
pub const CONSTANCY_TOL: f64 = 1e-6;

pub fn check_constant(p: &Prepared) -> Result<f64> {
    let field = FrameField::sample(&p.base, p.grid(), &p.radial.samples, &p.rule, &HyperbolicCollar)?;
    let dev = verify_constant(&field);
    if dev > CONSTANCY_TOL {
        return Err(GeomError::NotConstant(dev));
    }
    Ok(dev)
}

/// Leaf integrals `∫ f da_r` at every radial node.
fn radial_profile<F: Fn(&LeafJets) -> Result<Vec<f64>> + Sync>(p: &Prepared, f: F) -> Result<Vec<f64>> {
    p.radial
        .nodes
        .par_iter()
        .map(|&(_, r, _)| {
            let jets = p.jets(r)?;
            jets.integrate(&f(&jets)?)
        })
        .collect()
}

pub fn so3_renormalize(p: &Prepared) -> Result<So3Result> {
    let constancy = check_constant(p)?;
    so3_series(p, constancy)
}

/// The SO(3) series without the constant-frame gate.
pub fn so3_series(p: &Prepared, constancy: f64) -> Result<So3Result> {
    let profile = radial_profile(p, |jets| Ok(so3_cs_pullback(&levi_civita_forms(jets).values)))?;
    let raw = p.radial.cumulative(&profile);
    let tau_inf = infinity_integrals(p)?.tau;
    let c = tau_inf / (4.0 * SQRT_2 * PI * PI);
    let rho = p.radial.samples.clone();
    let divergent: Vec<Complex64> = rho.iter().map(|r| Complex64::new(c * r.exp(), 0.0)).collect();
    let series = AsymptoticSeries::new(rho.clone(), raw.iter().map(|&x| Complex64::new(x, 0.0)).collect(), divergent)?;
    Ok(So3Result {
        cs_r: series.limit.re,
        raw_exp_coefficient: exp_coefficient(&rho, &raw)?,
        expected_exp_coefficient: -c,
        tau_inf,
        series,
        constancy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct WVolume {
    pub rho: Vec<f64>,
    pub volume: Vec<f64>,
    pub mean_integral: Vec<f64>,
    pub w: Vec<f64>,
    /// Least-squares slope of `W(ρ)`.
    pub slope: f64,
    /// Max deviation from the fitted line.
    pub linearity_residual: f64,
    pub w_r: f64,
}

/// `W(C_ρ) = Vol(C_ρ) + ¼∫_{S_ρ} H̄ da_ρ`, frame independent.
pub fn w_volume(p: &Prepared) -> Result<WVolume> {
    let areas: Result<Vec<f64>> = p
        .radial
        .nodes
        .par_iter()
        .map(|&(_, r, _)| {
            let leaf = propagate(&p.geom, r)?;
            integrate_surface(&vec![1.0; p.grid().len()], &leaf.geometry)
        })
        .collect();
    let collar_vol = p.radial.cumulative(&areas?);
    let rho = p.radial.samples.clone();
    let mean_integral: Result<Vec<f64>> = rho
        .par_iter()
        .map(|&r| {
            let leaf = propagate(&p.geom, r)?;
            integrate_surface(&leaf.geometry.mean_curvature(), &leaf.geometry)
        })
        .collect();
    let mean_integral = mean_integral?;
    let volume: Vec<f64> = collar_vol.iter().map(|v| v + p.scenario.core_volume()).collect();
    let w: Vec<f64> = volume.iter().zip(&mean_integral).map(|(v, h)| v + 0.25 * h).collect();
    let basis: [&dyn Fn(f64) -> f64; 2] = [&|_| 1.0, &|r| r];
    let line = least_squares(&rho, &w, &basis)?;
    let linearity_residual = rho.iter().zip(&w).map(|(r, y)| (y - line[0] - line[1] * r).abs()).fold(0.0, f64::max);
    let (_, chi) = euler_characteristic(&p.geom)?;
    let last = rho.len() - 1;
    Ok(WVolume { w_r: w[last] + PI * rho[last] * chi as f64, rho, volume, mean_integral, w, slope: line[1], linearity_residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PslResult {
    pub series: AsymptoticSeries,
    /// `lim F = 4iπ² CS^R_PSL`.
    pub limit: Complex64,
    pub cs_r: Complex64,
    pub core_constant: f64,
    pub h_inf: f64,
    pub tau_inf: f64,
    pub chi: i64,
    pub chi_raw: f64,
    pub re_exp_coefficient: f64,
    /// `−∫H(s∞)da∞ / (4√2)`.
    pub expected_re_exp_coefficient: f64,
}

pub fn psl2_renormalize(p: &Prepared) -> Result<PslResult> {
    check_constant(p)?;
    let grid = p.grid().clone();
    let weights = grid.weights()?;
    let coords = grid.all_coords();
    let profile: Result<Vec<Complex64>> = p
        .radial
        .nodes
        .par_iter()
        .map(|&(_, r, _)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &(a, b)) in coords.iter().enumerate() {
                let da = p.base[k].leaf(r)?.first.determinant().sqrt();
                acc += psl2_density_with_step(&p.collar, &p.rule, a, b, r, p.scenario.fd_step)? * (weights[k] * da);
            }
            Ok(acc)
        })
        .collect();
    let profile = profile?;
    let re = p.radial.cumulative(&profile.iter().map(|z| z.re).collect::<Vec<_>>());
    let im = p.radial.cumulative(&profile.iter().map(|z| z.im).collect::<Vec<_>>());
    let base_jets = p.jets(0.0)?;
    let reps = leaf_reports(&base_jets, &levi_civita_forms(&base_jets));
    let gap: Vec<f64> = reps.iter().map(|r| r.comparison.h_bar - r.shape.mean).collect();
    let core_constant = p.scenario.core_volume() + 0.25 * base_jets.integrate(&gap)?;
    let inf = infinity_integrals(p)?;
    let (chi_raw, chi) = euler_characteristic(&p.geom)?;
    let rho = p.radial.samples.clone();
    let lead = Complex64::new(inf.mean, inf.tau) / (4.0 * SQRT_2);
    let divergent: Vec<Complex64> = rho.iter().map(|&r| lead * r.exp() + Complex64::new(PI * r * chi as f64, 0.0)).collect();
    let raw: Vec<Complex64> = re.iter().zip(&im).map(|(x, y)| Complex64::new(x + core_constant, *y)).collect();
    let series = AsymptoticSeries::new(rho.clone(), raw, divergent)?;
    let limit = series.limit;
    Ok(PslResult {
        cs_r: limit / Complex64::new(0.0, 4.0 * PI * PI),
        limit,
        core_constant,
        h_inf: inf.mean,
        tau_inf: inf.tau,
        chi,
        chi_raw,
        re_exp_coefficient: exp_coefficient(&rho, &re)?,
        expected_re_exp_coefficient: -inf.mean / (4.0 * SQRT_2),
        series,
    })
}

/// `|4iπ² CS^R_PSL − (W^R + iπ² CS^R_SO3)|`.
pub fn cross_pipeline_check(psl: &PslResult, so3: &So3Result, w: &WVolume) -> f64 {
    (psl.limit - Complex64::new(w.w_r, PI * PI * so3.cs_r)).norm()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PqDiagnostics {
    pub max_p: f64,
    pub q_integral: f64,
    /// `∫ Σ_cyc I_W(∂_r, E_i∞) I_W(∂_r, [E_j∞, E_k∞]) da∞ / (4√2π²)`.
    pub q_expected: f64,
    pub q_residual: f64,
}

/// `P` against the adapted reference frame on every sampled leaf, and the `Q`
/// identity on the base leaf.
pub fn p_q_diagnostics(p: &Prepared) -> Result<PqDiagnostics> {
    let reference = fermi_frame();
    let ref_jets = |r: f64| LeafJets::compute(&p.base, &p.diff, &reference, &HyperbolicCollar, r);
    let mut max_p: f64 = 0.0;
    for &r in &p.radial.samples {
        for j in ref_jets(r)?.jets {
            let m = Matrix2::identity() - j.leaf.weingarten;
            let e = j.e.fixed_view::<2, 2>(0, 0).into_owned();
            // [Ē_i, ∂_r] = −∂_r Ē_i in collar components.
            let br = -j.de[2].fixed_view::<2, 2>(0, 0).into_owned();
            let ip = |x: nalgebra::Vector2<f64>, y: nalgebra::Vector2<f64>| x.dot(&(j.leaf.first * y));
            let val = (ip(m * e.column(1), m * br.column(0)) - ip(m * e.column(0), m * br.column(1))) / (2.0 * m.determinant());
            max_p = max_p.max(val.abs());
        }
    }
    let rj = ref_jets(0.0)?;
    let fj = p.jets(0.0)?;
    let l = l_basis();
    let q: Vec<f64> = rj
        .jets
        .iter()
        .zip(&fj.jets)
        .map(|(s, t)| {
            let m = Matrix2::identity() - s.leaf.weingarten;
            let minv = m.try_inverse().unwrap_or_else(Matrix2::zeros);
            let (g, dg) = gauge_jet(s, t);
            let gi = g.transpose();
            let sum: f64 = (0..2)
                .map(|i| {
                    let x = minv * s.e.fixed_view::<2, 1>(0, i);
                    let dgx = dg[0] * x[0] + dg[1] * x[1];
                    pairing(&(gi * l[i] * g), &(gi * dgx))
                })
                .sum();
            0.5 * m.determinant() * sum
        })
        .collect();
    let q_integral = rj.integrate(&q)?;
    let q_expected = infinity_integrals(p)?.bracket_sum / (4.0 * SQRT_2 * PI * PI);
    Ok(PqDiagnostics { max_p, q_integral, q_expected, q_residual: (q_integral - q_expected).abs() })
}

/// Holography locality: two frames that agree for `r >= r_cut` differ in
/// `CS^R_SO3` only through their collar integrals over `[0, r_cut]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Locality {
    pub cs_difference: f64,
    pub inner_difference: f64,
    pub residual: f64,
}

/// `r_cut` must be one of the sample radii. The frames need not be constant
/// below `r_cut`, so the constant-frame gate is skipped.
pub fn holography_locality(p: &Prepared, q: &Prepared, r_cut: f64) -> Result<Locality> {
    let k = p
        .radial
        .samples
        .iter()
        .position(|&r| (r - r_cut).abs() < 1e-12)
        .ok_or_else(|| GeomError::Domain(format!("cut radius {r_cut} is not a sample radius")))?;
    let (a, b) = (so3_series(p, f64::NAN)?, so3_series(q, f64::NAN)?);
    let cs_difference = a.cs_r - b.cs_r;
    let inner_difference = a.series.raw[k].re - b.series.raw[k].re;
    Ok(Locality { cs_difference, inner_difference, residual: (cs_difference - inner_difference).abs() })
}

/// Everything a run reports.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormReport {
    pub so3: So3Result,
    pub psl: PslResult,
    pub w: WVolume,
    pub vol_r: f64,
    pub cross_pipeline_residual: f64,
    pub pq: PqDiagnostics,
}

pub fn renormalize(p: &Prepared) -> Result<RenormReport> {
    let so3 = so3_renormalize(p)?;
    let psl = psl2_renormalize(p)?;
    let w = w_volume(p)?;
    let pq = p_q_diagnostics(p)?;
    Ok(RenormReport { cross_pipeline_residual: cross_pipeline_check(&psl, &so3, &w), vol_r: w.w_r + 0.5 * PI * psl.chi as f64, so3, psl, w, pq })
}
