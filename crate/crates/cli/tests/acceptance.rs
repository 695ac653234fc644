//! Acceptance checks at the default 64×64 grid with 17 sample radii.
//! Prints one line per criterion, then fails if any criterion failed.

use cslab_cli::config::RawConfig;
use cslab_cli::run::{random_cells, run, run_graph, run_tube, TubeRun};
use cslab_core::cartan::{koszul, leaf_reports, levi_civita_forms, LeafJets};
use cslab_core::chernsimons::{adapted_reduction, decomposition_residual, jet_at, so3_density};
use cslab_core::foliation::{conformal_check, propagate, Collar, HyperbolicCollar};
use cslab_core::frames::{rotating_frame, FrameRule};
use cslab_core::renorm::Prepared;
use cslab_core::surfaces::{fundamental_forms, FlowedSurface, Orientation, SurfaceChart, VerticalPlaneStrip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;

const L: f64 = 2.0;
const U0: f64 = 1.0;
const DECOMPOSITION_CELLS: usize = 1000;

struct Criterion {
    id: u32,
    title: &'static str,
    /// `(label, measured, tolerance)`; each passes when `measured <= tolerance`.
    parts: Vec<(String, f64, f64)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self { id, title, parts: Vec::new() }
    }

    fn at_most(mut self, label: impl Into<String>, value: f64, tol: f64) -> Self {
        self.parts.push((label.into(), value, tol));
        self
    }

    fn passed(&self) -> bool {
        !self.parts.is_empty() && self.parts.iter().all(|(_, v, t)| *v <= *t)
    }

    fn line(&self) -> String {
        let mut s = format!("criterion {:>2} {} {}", self.id, if self.passed() { "PASS" } else { "FAIL" }, self.title);
        for (label, v, t) in &self.parts {
            let _ = write!(s, " | {label} {v:.2e} <= {t:.0e}{}", if v <= t { "" } else { " FAILED" });
        }
        s
    }
}

fn raw(frame: &str) -> RawConfig {
    let mut raw = RawConfig::default();
    raw.set(&format!("frame={frame}")).unwrap();
    raw.set("beta=0.3").unwrap();
    raw
}

fn tube_run(frame: &str) -> TubeRun {
    run_tube(&raw(frame).resolve().unwrap()).unwrap()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

const STRIP: VerticalPlaneStrip = VerticalPlaneStrip { length: 1.0, half_width: 0.8 };

fn strip_cells(seed: u64, n: usize) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(-0.8..0.8), rng.gen_range(0.0..2.0))).collect()
}

fn main() {
    let frames = ["fermi", "twisted", "tilted"];
    let runs: Vec<TubeRun> = frames.iter().map(|f| tube_run(f)).collect();
    let preps: Vec<&Prepared> = runs.iter().map(|t| &t.prepared).collect();
    let (fermi, tilted) = (&runs[0], &runs[2]);
    let radii = preps[0].radial.samples.clone();
    let mut out = Vec::new();

    // 1. Gauss equation on every sampled tube leaf and on a Fuchsian strip collar.
    let tube_gauss = max_of(radii.iter().map(|&r| propagate(&preps[0].geom, r).unwrap().geometry.gauss_residual()));
    let strip_geom = fundamental_forms(&SurfaceChart::sample(&STRIP, 64, 33).unwrap(), Orientation::Positive).unwrap();
    let strip_gauss = max_of([0.0, 0.5, 1.0, 2.0].map(|r| propagate(&strip_geom, r).unwrap().geometry.gauss_residual()));
    out.push(Criterion::new(1, "Gauss equation").at_most("tube leaves", tube_gauss, 1e-6).at_most("Fuchsian leaves", strip_gauss, 1e-6));

    // 2. Propagated principal curvatures against the addition formula and the flowed embedding.
    let geom = &preps[0].geom;
    let mut eig: f64 = 0.0;
    for &r in &radii {
        let leaf = propagate(geom, r).unwrap().geometry;
        let u = U0 + r;
        for k in 0..leaf.grid.len() {
            let [lo, hi] = leaf.principal_curvatures(k);
            eig = eig.max((lo + 1.0 / u.tanh()).abs()).max((hi + u.tanh()).abs());
        }
    }
    let surface = &preps[0].collar.surface;
    let mut flowed: f64 = 0.0;
    for r in [0.5, 1.5, 3.0] {
        let leaf = propagate(geom, r).unwrap().geometry;
        let direct = fundamental_forms(&SurfaceChart::sample(&FlowedSurface { base: surface, orientation: Orientation::Positive, r }, 64, 64).unwrap(), Orientation::Positive).unwrap();
        flowed = flowed.max(max_of(leaf.weingarten.iter().zip(&direct.weingarten).map(|(x, y)| (x - y).amax())));
    }
    out.push(Criterion::new(2, "propagation oracle").at_most("eigenvalues", eig, 1e-9).at_most("flowed chart", flowed, 1e-6));

    // 3. Conformal class at infinity, and the graph-local critical point.
    let conformal = max_of(radii.iter().map(|&r| conformal_check(geom, r).unwrap()));
    let graph = run_graph(&raw("fermi").resolve().unwrap().graph).unwrap().results;
    out.push(
        Criterion::new(3, "conformal equivalence")
            .at_most("tube", conformal, 1e-10)
            .at_most("graph pulled-back metric", graph.critical_infinity_metric_residual, 1e-6)
            .at_most("graph differential", graph.critical_differential_residual, 1e-6),
    );

    // 4 and 5. Torsion and comparison identities; adapted frames have no torsion and H̄ = −(tanh u + coth u).
    let mut c4 = Criterion::new(4, "torsion triple agreement");
    let mut c5 = Criterion::new(5, "comparison identities");
    for (name, t) in frames.iter().zip(&runs) {
        c4 = c4.at_most(format!("{name} spread"), t.identities.torsion_spread, 1e-5);
        c5 = c5.at_most(format!("{name} B"), t.identities.comparison_weingarten, 1e-5).at_most(format!("{name} H"), t.identities.comparison_mean, 1e-5);
    }
    for (name, p) in frames.iter().zip(&preps).take(2) {
        let (mut tau, mut hs, mut hbar): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for r in [0.0, 1.0, 4.0] {
            let jets = LeafJets::compute(&p.base, &p.diff, &p.rule, &HyperbolicCollar, r).unwrap();
            let u = U0 + r;
            for rep in leaf_reports(&jets, &levi_civita_forms(&jets)) {
                tau = tau.max(rep.torsion.coframe.abs()).max(rep.torsion.bracket.abs()).max(rep.torsion.second_form.abs());
                hs = hs.max(rep.shape.mean.abs());
                hbar = hbar.max((rep.comparison.h_bar + u.tanh() + 1.0 / u.tanh()).abs());
            }
        }
        c4 = c4.at_most(format!("{name} |tau|"), tau, 1e-10);
        c5 = c5.at_most(format!("{name} H^s"), hs, 1e-5).at_most(format!("{name} H-bar"), hbar, 1e-5);
    }
    out.push(c4);
    out.push(c5);

    // 6. General CS density against the adapted reduction; the Fermi collar integral vanishes.
    let reduction_gap = |collar_rule: &(dyn Fn(f64, f64, f64) -> (f64, f64) + Sync), cells: &[(f64, f64, f64)]| {
        max_of(cells.par_iter().map(|&(a, b, r)| {
            let (g, red) = collar_rule(a, b, r);
            (g - red).abs()
        }).collect::<Vec<_>>())
    };
    let mut c6 = Criterion::new(6, "CS reduction");
    for (name, p) in frames.iter().zip(&preps).take(2) {
        let eval = |a: f64, b: f64, r: f64| {
            let j = jet_at(&p.collar, &p.rule, a, b, r).unwrap();
            let w = koszul(&j);
            (so3_density(&w), adapted_reduction(&j, &w).unwrap())
        };
        c6 = c6.at_most(format!("{name} cells"), reduction_gap(&eval, &random_cells(p, 3, 64)), 1e-5);
    }
    let strip_c = Collar::new(STRIP, Orientation::Positive);
    let rotating: Box<dyn FrameRule> = rotating_frame(0.3);
    let eval = |a: f64, b: f64, r: f64| {
        let j = jet_at(&strip_c, &rotating, a, b, r).unwrap();
        let w = koszul(&j);
        (so3_density(&w), adapted_reduction(&j, &w).unwrap())
    };
    c6 = c6.at_most("rotating Fuchsian cells", reduction_gap(&eval, &strip_cells(5, 64)), 1e-5);
    let fermi_cs = max_of(fermi.renorm.so3.series.raw.iter().map(|z| z.norm()));
    out.push(c6.at_most("Fermi collar integral", fermi_cs, 1e-6));

    // 7. Pointwise decomposition at random collar cells.
    let mut c7 = Criterion::new(7, "pointwise decomposition");
    for (i, (name, p)) in frames.iter().zip(&preps).enumerate() {
        let cells = random_cells(p, 100 + i as u64, DECOMPOSITION_CELLS);
        let worst = max_of(cells.par_iter().map(|&(a, b, r)| decomposition_residual(&p.collar, &p.rule, a, b, r).unwrap().residual()).collect::<Vec<_>>());
        c7 = c7.at_most(format!("{name} x{}", cells.len()), worst, 1e-4);
    }
    out.push(c7);

    // 8. W-volume of the tube.
    let w = &fermi.renorm.w;
    out.push(
        Criterion::new(8, "W-volume law")
            .at_most("|W + pi L/2|", max_of(w.w.iter().map(|x| (x + PI * L / 2.0).abs())), 1e-4)
            .at_most("|slope + pi chi|", (w.slope + PI * fermi.results.euler_characteristic as f64).abs(), 1e-5),
    );

    // 9. SO(3) series for the tilted frame.
    let r = &tilted.results;
    out.push(
        Criterion::new(9, "so3 convergence (tilted)")
            .at_most("decay slope + 0.9", r.so3_slope.unwrap_or(f64::NAN) + 0.9, 0.0)
            .at_most("exp coefficient rel", (r.so3_exp_coefficient / r.so3_expected_exp_coefficient - 1.0).abs(), 0.01),
    );

    // 10. Complex series for the tilted frame.
    out.push(
        Criterion::new(10, "psl convergence (tilted)")
            .at_most("decay slope + 0.9", r.psl_slope.unwrap_or(f64::NAN) + 0.9, 0.0)
            .at_most("real exp coefficient rel", (r.psl_re_exp_coefficient / r.psl_expected_re_exp_coefficient - 1.0).abs(), 0.01)
            .at_most("|chi|", r.euler_characteristic.abs() as f64, 0.0),
    );

    // 11. Cross-pipeline identity, and the Fermi values on both sides.
    let mut c11 = Criterion::new(11, "cross-pipeline identity");
    for (name, t) in frames.iter().zip(&runs) {
        c11 = c11.at_most(format!("{name} residual"), t.results.cross_pipeline_residual, 1e-3);
    }
    let f = &fermi.renorm;
    let lhs = (f.psl.limit - num_complex::Complex64::new(-PI * L / 2.0, 0.0)).norm();
    let rhs = (num_complex::Complex64::new(f.w.w_r, PI * PI * f.so3.cs_r) - num_complex::Complex64::new(-PI * L / 2.0, 0.0)).norm();
    out.push(c11.at_most("Fermi PSL side", lhs, 1e-4).at_most("Fermi W + SO3 side", rhs, 1e-4));

    // 12. P and Q.
    let mut c12 = Criterion::new(12, "P vanishing and Q identity");
    for (name, t) in frames.iter().zip(&runs) {
        c12 = c12.at_most(format!("{name} max|P|"), t.results.max_p, 1e-5).at_most(format!("{name} Q"), t.results.q_residual, 1e-4);
    }
    out.push(c12);

    // 13. Determinism across repeated runs and worker counts.
    let render = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let o = pool.install(|| run(&raw("tilted")).unwrap());
        (o.csv, cslab_cli::report::json_string(&o.report).unwrap())
    };
    let (a, b, c) = (render(1), render(4), render(4));
    let same = |x: &(String, String), y: &(String, String)| if x == y { 0.0 } else { 1.0 };
    out.push(Criterion::new(13, "determinism").at_most("1 vs 4 threads", same(&a, &b), 0.0).at_most("repeat", same(&b, &c), 0.0));

    for c in &out {
        println!("{}", c.line());
    }
    let failed: Vec<u32> = out.iter().filter(|c| !c.passed()).map(|c| c.id).collect();
    println!("acceptance: {} of {} criteria passed", out.len() - failed.len(), out.len());
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
