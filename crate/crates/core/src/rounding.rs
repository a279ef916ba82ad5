//! Product-state rounding of relaxation solutions.
//!
//! Five constructions, each emitting a pure product state:
//!
//! * `FieldOnly`: every qubit in `|+>`.
//! * `IsingGw`: hyperplane rounding of the edge-only relaxation, qubits on
//!   the z axis.
//! * `AlgA`: hyperplane rounding of the full relaxation, qubits on the z axis.
//! * `AlgB`: keeps the relaxation's `x_i` and spends the remaining Bloch
//!   length `sqrt(1 - x_i^2)` on the rounded z sign.
//! * `AlgC(q)`: as `AlgB` with `x_i` scaled by `q`; `q = 0` is `AlgA` and
//!   `q = 1` is `AlgB`.
//!
//! Randomness comes from per-trial ChaCha streams keyed by `(seed, trial)`,
//! so trials are reproducible independent of execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::exact::{evaluate_product_state, BlochAssignment, BlochVector};
use crate::instance::Instance;
use crate::relax::{GramVectors, SdpSolution};

pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum RoundingError {
    #[error("interpolation parameter q = {0} is outside [0, 1]")]
    InvalidQ(f64),
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("at least one trial is required")]
    NoTrials,
    #[error("relaxation has {got} vertices, instance has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Algorithm {
    FieldOnly,
    IsingGw,
    AlgA,
    AlgB,
    AlgC(f64),
}

impl Algorithm {
    /// Tie-break order for `best_of`.
    pub fn rank(&self) -> u8 {
        match self {
            Algorithm::FieldOnly => 0,
            Algorithm::IsingGw => 1,
            Algorithm::AlgA => 2,
            Algorithm::AlgB => 3,
            Algorithm::AlgC(_) => 4,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::FieldOnly => "FieldOnly",
            Algorithm::IsingGw => "IsingGW",
            Algorithm::AlgA => "AlgA",
            Algorithm::AlgB => "AlgB",
            Algorithm::AlgC(_) => "AlgC",
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self {
            Algorithm::AlgC(q) => Some(*q),
            _ => None,
        }
    }
}

impl Serialize for Algorithm {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Identifies one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialId {
    pub seed: u64,
    pub trial: u64,
}

impl TrialId {
    pub fn new(seed: u64, trial: u64) -> Self {
        TrialId { seed, trial }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.trial);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundingOutcome {
    pub algo: Algorithm,
    pub q: Option<f64>,
    pub seed: u64,
    pub trial: u64,
    pub value: f64,
    pub state: BlochAssignment,
}

impl RoundingOutcome {
    fn new(inst: &Instance, algo: Algorithm, id: TrialId, state: BlochAssignment) -> Self {
        let value = evaluate_product_state(inst, &state)
            .expect("rounded states are pure and sized to the instance")
            .total;
        RoundingOutcome {
            algo,
            q: algo.q(),
            seed: id.seed,
            trial: id.trial,
            value,
            state,
        }
    }
}

/// `s_i = sign(<g, u_i>)` for one standard Gaussian `g`; zero maps to `+1`.
pub fn hyperplane_signs<R: rand::Rng + ?Sized>(grams: &GramVectors, rng: &mut R) -> Vec<f64> {
    let v = grams.vectors();
    let g: Vec<f64> = (0..grams.rank()).map(|_| StandardNormal.sample(rng)).collect();
    (0..grams.n())
        .map(|i| {
            let proj: f64 = v.row(i).iter().zip(&g).map(|(a, b)| a * b).sum();
            if proj < 0.0 {
                -1.0
            } else {
                1.0
            }
        })
        .collect()
}

fn check_size(inst: &Instance, sdp: &SdpSolution) -> Result<(), RoundingError> {
    if sdp.x.len() != inst.n() || sdp.grams.n() != inst.n() {
        return Err(RoundingError::SizeMismatch {
            expected: inst.n(),
            got: sdp.x.len(),
        });
    }
    Ok(())
}

fn z_axis_state(signs: &[f64]) -> BlochAssignment {
    BlochAssignment::new(signs.iter().map(|&s| BlochVector::new(0.0, 0.0, s)).collect())
}

/// Bloch vectors `(q x_i, 0, sqrt(1 - (q x_i)^2) s_i)`.
pub fn interpolated_state(x: &[f64], signs: &[f64], q: f64) -> BlochAssignment {
    BlochAssignment::new(
        x.iter()
            .zip(signs)
            .map(|(&xi, &s)| {
                // Adding +0.0 normalizes a -0.0 product at q = 0.
                let tx = q * xi + 0.0;
                let alpha = (1.0 - tx * tx).max(0.0).sqrt();
                BlochVector::new(tx, 0.0, alpha * s)
            })
            .collect(),
    )
}

pub fn algorithm_a(inst: &Instance, sdp: &SdpSolution, id: TrialId) -> Result<RoundingOutcome, RoundingError> {
    check_size(inst, sdp)?;
    let signs = hyperplane_signs(&sdp.grams, &mut id.rng());
    Ok(RoundingOutcome::new(inst, Algorithm::AlgA, id, z_axis_state(&signs)))
}

pub fn algorithm_b(inst: &Instance, sdp: &SdpSolution, id: TrialId) -> Result<RoundingOutcome, RoundingError> {
    check_size(inst, sdp)?;
    let signs = hyperplane_signs(&sdp.grams, &mut id.rng());
    let state = BlochAssignment::new(
        sdp.x
            .iter()
            .zip(&signs)
            .map(|(&xi, &s)| {
                let alpha = (1.0 - xi * xi).max(0.0).sqrt();
                BlochVector::new(xi, 0.0, alpha * s)
            })
            .collect(),
    );
    Ok(RoundingOutcome::new(inst, Algorithm::AlgB, id, state))
}

pub fn algorithm_c(inst: &Instance, sdp: &SdpSolution, q: f64, id: TrialId) -> Result<RoundingOutcome, RoundingError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(RoundingError::InvalidQ(q));
    }
    check_size(inst, sdp)?;
    let signs = hyperplane_signs(&sdp.grams, &mut id.rng());
    let state = interpolated_state(&sdp.x, &signs, q);
    Ok(RoundingOutcome::new(inst, Algorithm::AlgC(q), id, state))
}

/// Every qubit in `|+>`; value `W/2 + H`.
pub fn warmup_field_state(inst: &Instance) -> RoundingOutcome {
    let state = BlochAssignment::all(inst.n(), BlochVector::new(1.0, 0.0, 0.0));
    RoundingOutcome::new(inst, Algorithm::FieldOnly, TrialId::new(0, 0), state)
}

/// Hyperplane rounding of the edge-only relaxation (see
/// [`crate::relax::solve_edge_relaxation`]); fields contribute `h_i/2`.
pub fn warmup_ising_state(
    inst: &Instance,
    edge_sdp: &SdpSolution,
    id: TrialId,
) -> Result<RoundingOutcome, RoundingError> {
    check_size(inst, edge_sdp)?;
    let signs = hyperplane_signs(&edge_sdp.grams, &mut id.rng());
    Ok(RoundingOutcome::new(inst, Algorithm::IsingGw, id, z_axis_state(&signs)))
}

/// Highest value wins; ties go to the lower algorithm rank, then to the
/// earlier candidate.
pub fn best_of(candidates: &[RoundingOutcome]) -> Result<RoundingOutcome, RoundingError> {
    let mut iter = candidates.iter();
    let mut best = iter.next().ok_or(RoundingError::NoCandidates)?;
    for c in iter {
        if c.value > best.value || (c.value == best.value && c.algo.rank() < best.algo.rank()) {
            best = c;
        }
    }
    Ok(best.clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub best: RoundingOutcome,
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub trials: usize,
}

/// Run `algo` for `trials` independent streams of `seed`.
///
/// For `IsingGw`, `sdp` must be the edge-only relaxation.
pub fn run_trials(
    inst: &Instance,
    sdp: &SdpSolution,
    algo: Algorithm,
    trials: usize,
    seed: u64,
) -> Result<TrialSummary, RoundingError> {
    if trials == 0 {
        return Err(RoundingError::NoTrials);
    }
    if let Algorithm::AlgC(q) = algo {
        if !(0.0..=1.0).contains(&q) {
            return Err(RoundingError::InvalidQ(q));
        }
    }
    check_size(inst, sdp)?;
    let round = |t: usize| -> RoundingOutcome {
        let id = TrialId::new(seed, t as u64);
        let out = match algo {
            Algorithm::FieldOnly => Ok(warmup_field_state(inst)),
            Algorithm::IsingGw => warmup_ising_state(inst, sdp, id),
            Algorithm::AlgA => algorithm_a(inst, sdp, id),
            Algorithm::AlgB => algorithm_b(inst, sdp, id),
            Algorithm::AlgC(q) => algorithm_c(inst, sdp, q, id),
        };
        out.expect("inputs validated above")
    };

    // Only values are kept per trial; the best state is rebuilt from its id.
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| round(t).value)
        .collect();
    let mut best_t = 0;
    for (t, &v) in values.iter().enumerate() {
        if v > values[best_t] {
            best_t = t;
        }
    }
    let mean = values.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(TrialSummary {
        best: round(best_t),
        mean,
        stderr,
        trials,
    })
}
