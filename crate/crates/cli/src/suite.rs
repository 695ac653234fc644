//! Standalone invariant suite over seeded random inputs.

use crate::error::{CliError, Stage};
use crate::report::Check;
use crate::run::{random_cells, tol};
use cslab_core::chernsimons::decomposition_residual;
use cslab_core::foliation::{a_matrix, infinity_metric_node, propagate_node};
use cslab_core::renorm::{FrameKind, Prepared, TubeScenario};
use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Random positive-definite first form and `I`-self-adjoint shape operator with
/// eigenvalues in `[-2.5, -0.2]`.
pub fn random_convex_node(rng: &mut impl Rng) -> (Matrix2<f64>, Matrix2<f64>) {
    let l = Matrix2::new(rng.gen_range(0.5..2.0), 0.0, rng.gen_range(-0.8..0.8), rng.gen_range(0.5..2.0));
    let first = l * l.transpose();
    let (t, k1, k2) = (rng.gen_range(0.0..std::f64::consts::PI), rng.gen_range(-2.5..-0.2), rng.gen_range(-2.5..-0.2));
    let (s, c) = t.sin_cos();
    let q = Matrix2::new(c, -s, s, c);
    // B = L⁻ᵀ Q D Qᵀ Lᵀ is self-adjoint for I = L Lᵀ.
    let lt = l.transpose();
    let lt_inv = lt.try_inverse().expect("triangular factor with positive diagonal");
    let b = lt_inv * q * Matrix2::new(k1, 0.0, 0.0, k2) * q.transpose() * lt;
    (first, b)
}

/// Max asymmetry of `I M` over `M = Bⁿ A_r⁻¹`, `n = 0..=3`.
pub fn self_adjoint_residual(first: &Matrix2<f64>, b: &Matrix2<f64>, r: f64) -> f64 {
    let a_inv = a_matrix(b, r).try_inverse().unwrap_or_else(|| Matrix2::from_element(f64::NAN));
    let mut bn = Matrix2::identity();
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let m = first * bn * a_inv;
        worst = worst.max((m - m.transpose()).amax() / m.amax().max(1.0));
        bn *= b;
    }
    worst
}

pub fn run_suite(seed: u64, samples: usize, cells: usize) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut adj, mut conf, mut semi): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let (first, b) = random_convex_node(&mut rng);
        let (r1, r2) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        adj = adj.max(self_adjoint_residual(&first, &b, r1));
        let base = infinity_metric_node(&first, &b).stage("infinity metric")?.0;
        let leaf = propagate_node(&first, &b, r1).stage("propagation")?;
        let moved = infinity_metric_node(&leaf.first, &leaf.weingarten).stage("infinity metric")?.0;
        let scale = (2.0 * r1).exp();
        conf = conf.max((moved - base * scale).amax() / (scale * base.amax()));
        let two = propagate_node(&leaf.first, &leaf.weingarten, r2).stage("propagation")?;
        let direct = propagate_node(&first, &b, r1 + r2).stage("propagation")?;
        semi = semi.max((two.first - direct.first).amax() / direct.first.amax()).max((two.weingarten - direct.weingarten).amax());
    }
    let mut checks = vec![
        Check::at_most("self_adjoint_powers", adj, 1e-10),
        Check::at_most("conformal_random_convex", conf, tol::CONFORMAL),
        Check::at_most("propagation_semigroup", semi, 1e-9),
    ];
    let frames = [
        ("fermi", FrameKind::Fermi),
        ("twisted", FrameKind::Twisted { n_s: 1.0, n_theta: 1.0 }),
        ("tilted", FrameKind::Tilted { beta: 0.3, n_s: 1.0, n_theta: 1.0 }),
    ];
    for (i, (name, frame)) in frames.into_iter().enumerate() {
        let p = Prepared::new(TubeScenario { frame, n1: 16, n2: 16, ..Default::default() }).stage("collar setup")?;
        let worst = random_cells(&p, seed.wrapping_add(i as u64 + 1), cells)
            .par_iter()
            .map(|&(a, b, r)| decomposition_residual(&p.collar, &p.rule, a, b, r).map(|d| d.residual()))
            .collect::<Result<Vec<_>, _>>()
            .stage("decomposition")?
            .into_iter()
            .fold(0.0, f64::max);
        checks.push(Check::at_most(&format!("decomposition_{name}"), worst, tol::DECOMPOSITION));
    }
    Ok(checks)
}
