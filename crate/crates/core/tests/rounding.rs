use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tfim_approx::constants::{beta_of_q, q_star};
use tfim_approx::instance::{random_instance, Instance, RandomInstanceParams};
use tfim_approx::relax::{solve_edge_relaxation, solve_soc_sdp, SdpSolution};
use tfim_approx::rounding::{algorithm_c, best_of, run_trials, warmup_field_state, Algorithm, TrialId};

const TOL: f64 = 1e-7;

/// `E[s_i s_j]` for hyperplane signs of unit vectors with inner product `c`.
fn sign_correlation(c: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * c.clamp(-1.0, 1.0).asin()
}

/// Expected value of the interpolated rounding with transverse component
/// `q x_i`, computed edge by edge from the moments.
fn expected_value(inst: &Instance, sdp: &SdpSolution, q: Option<f64>) -> f64 {
    let tx: Vec<f64> = match q {
        None => vec![0.0; inst.n()],
        Some(q) => sdp.x.iter().map(|x| q * x).collect(),
    };
    let amp: Vec<f64> = tx.iter().map(|t| (1.0 - t * t).max(0.0).sqrt()).collect();
    let edges: f64 = inst
        .edges()
        .iter()
        .map(|e| {
            let zz = amp[e.u] * amp[e.v] * sign_correlation(sdp.c[(e.u, e.v)]);
            0.5 * e.w * (1.0 - e.j.value() * zz)
        })
        .sum();
    let fields: f64 = inst.fields().iter().zip(&tx).map(|(h, t)| 0.5 * h * (1.0 + t)).sum();
    edges + fields
}

fn ensemble(count: usize) -> Vec<(Instance, SdpSolution)> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(4_417);
            rng.set_stream(i as u64);
            let params = RandomInstanceParams { n: 3 + i % 5, edge_prob: 0.6, h_max: 1.2 };
            let inst = random_instance(&params, &mut rng);
            let sdp = solve_soc_sdp(&inst, TOL).unwrap();
            (inst, sdp)
        })
        .collect()
}

fn assert_monte_carlo(inst: &Instance, sdp: &SdpSolution, algo: Algorithm, q: Option<f64>, trials: usize) {
    let summary = run_trials(inst, sdp, algo, trials, 2_024).unwrap();
    let expected = expected_value(inst, sdp, q);
    let dev = (summary.mean - expected).abs();
    assert!(
        dev <= 3.0 * summary.stderr + 1e-9,
        "{}: mean {} vs closed form {} ({} standard errors)",
        algo.name(),
        summary.mean,
        expected,
        dev / summary.stderr
    );
}

#[test]
fn triangle_means_match_closed_forms() {
    let inst = Instance::triangle(0.6);
    let sdp = solve_soc_sdp(&inst, TOL).unwrap();
    let qs = q_star().unwrap();
    assert_monte_carlo(&inst, &sdp, Algorithm::AlgA, None, 100_000);
    assert_monte_carlo(&inst, &sdp, Algorithm::AlgB, Some(1.0), 100_000);
    assert_monte_carlo(&inst, &sdp, Algorithm::AlgC(qs), Some(qs), 100_000);
    assert_monte_carlo(&inst, &sdp, Algorithm::AlgC(0.3), Some(0.3), 100_000);
}

#[test]
fn triangle_algorithm_a_short_run() {
    let inst = Instance::triangle(0.6);
    let sdp = solve_soc_sdp(&inst, TOL).unwrap();
    assert_monte_carlo(&inst, &sdp, Algorithm::AlgA, None, 10_000);
}

#[test]
fn random_instance_means_match_closed_forms() {
    for (inst, sdp) in ensemble(6) {
        if inst.edges().is_empty() {
            continue;
        }
        assert_monte_carlo(&inst, &sdp, Algorithm::AlgA, None, 20_000);
        assert_monte_carlo(&inst, &sdp, Algorithm::AlgC(0.6), Some(0.6), 20_000);
    }
}

/// The leftover z amplitudes satisfy
/// `alpha_i alpha_j >= (1 - q^2) + q^2 t_ij^2` for every `q`.
#[test]
fn leftover_amplitude_bound() {
    for (inst, sdp) in ensemble(12) {
        let t = sdp.edge_correlations(&inst);
        for k in 0..=20 {
            let q = k as f64 / 20.0;
            let amp: Vec<f64> = sdp.x.iter().map(|x| (1.0 - (q * x).powi(2)).max(0.0).sqrt()).collect();
            for (e, tij) in inst.edges().iter().zip(&t) {
                let bound = (1.0 - q * q) + q * q * tij * tij;
                assert!(amp[e.u] * amp[e.v] >= bound - 1e-9, "q {q}: {} < {bound}", amp[e.u] * amp[e.v]);
            }
        }
    }
}

/// Per vertex, the rounded field term keeps at least `(1 + q)/2` of the
/// relaxation's, whichever sign `x_i` has.
#[test]
fn field_terms_keep_their_share() {
    let mut nonnegative_x = false;
    for (inst, sdp) in ensemble(12) {
        for q in [0.0, 0.25, 0.631, 1.0] {
            let out = algorithm_c(&inst, &sdp, q, TrialId::new(1, 0)).unwrap();
            for (i, (&h, &x)) in inst.fields().iter().zip(&sdp.x).enumerate() {
                let rounded = 0.5 * h * (1.0 + out.state.vectors[i].x);
                let relaxed = 0.5 * h * (1.0 + x);
                assert!(rounded >= 0.5 * (1.0 + q) * relaxed - 1e-12);
                nonnegative_x |= x >= 0.0;
            }
        }
    }
    assert!(nonnegative_x, "no vertex with nonnegative x");
}

#[test]
fn rounded_states_are_pure() {
    for (inst, sdp) in ensemble(8) {
        for algo in [Algorithm::AlgA, Algorithm::AlgB, Algorithm::AlgC(0.5)] {
            let s = run_trials(&inst, &sdp, algo, 25, 9).unwrap();
            for b in &s.best.state.vectors {
                assert!((b.norm() - 1.0).abs() <= 1e-12);
                assert_eq!(b.y, 0.0);
            }
        }
        for b in &warmup_field_state(&inst).state.vectors {
            assert_eq!((b.x, b.y, b.z), (1.0, 0.0, 0.0));
        }
    }
}

#[test]
fn triangle_best_of_meets_the_guarantee() {
    let inst = Instance::triangle(0.6);
    let sdp = solve_soc_sdp(&inst, TOL).unwrap();
    let edge_sdp = solve_edge_relaxation(&inst, TOL).unwrap();
    let qs = q_star().unwrap();
    let ratio = beta_of_q(qs).unwrap().value;
    let mut bests = vec![warmup_field_state(&inst)];
    bests.push(run_trials(&inst, &edge_sdp, Algorithm::IsingGw, 1_000, 5).unwrap().best);
    for algo in [Algorithm::AlgA, Algorithm::AlgB, Algorithm::AlgC(qs)] {
        bests.push(run_trials(&inst, &sdp, algo, 1_000, 5).unwrap().best);
    }
    let best = best_of(&bests).unwrap();
    assert!(best.value >= 0.8156 * sdp.objective);
    // The guarantee itself holds in expectation for the interpolated rounding.
    assert!(expected_value(&inst, &sdp, Some(qs)) >= ratio * sdp.objective - 1e-9);
}
