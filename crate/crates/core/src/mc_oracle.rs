//! Monte Carlo cross-check of the analytic success probabilities.
//!
//! Every trial draws the slot outcomes of each elementary link as
//! independent Bernoulli variables and, for chains, one Bernoulli per swap.
//! The estimates target the un-normalized probabilities; the 1/N
//! normalization is plain arithmetic and is not simulated.
//!
//! Runs are reproducible: the generator is ChaCha8 seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::ground_chain::{fiber_efficiency, ChainSpec};
use crate::memory::MemoryModel;
use crate::params::SystemParams;

pub const RNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64";
pub const MIN_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: u64,
    pub rng_seed: u64,
    pub rng: &'static str,
}

impl McEstimate {
    fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let mean = successes as f64 / trials as f64;
        McEstimate {
            mean,
            standard_error: (mean * (1.0 - mean) / trials as f64).sqrt(),
            trials,
            rng_seed: seed,
            rng: RNG_ALGORITHM,
        }
    }
}

/// Per-slot success probabilities `η_src·η_ch²·η_QM(k)²` for k = 1..N.
fn slot_probabilities(params: &SystemParams, eta_ch: f64) -> Vec<f64> {
    let per_pair = params.source_efficiency * eta_ch * eta_ch;
    MemoryModel::from_params(params)
        .efficiencies()
        .map(|qm| per_pair * qm * qm)
        .collect()
}

/// Draws one elementary link: true if any slot succeeds.
fn draw_link(rng: &mut ChaCha8Rng, slots: &[f64]) -> bool {
    slots.iter().any(|&p| rng.gen::<f64>() < p)
}

fn check_trials(trials: u64) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::domain(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    Ok(())
}

/// Estimates the probability of at least one heralded pair in N slots.
pub fn simulate_elementary(params: &SystemParams, eta_ch: f64, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    check_probability("eta_ch", eta_ch)?;
    let slots = slot_probabilities(params, eta_ch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let successes = (0..trials).filter(|_| draw_link(&mut rng, &slots)).count() as u64;
    Ok(McEstimate::from_counts(successes, trials, seed))
}

/// Estimates the probability that all links and all swaps of a chain succeed.
pub fn simulate_chain(params: &SystemParams, spec: &ChainSpec, trials: u64, seed: u64) -> Result<McEstimate> {
    check_trials(trials)?;
    let eta_ch = fiber_efficiency(spec.arm_length(), params.fiber_attenuation)?;
    let slots = slot_probabilities(params, eta_ch);
    let swap = params.bsm_efficiency * params.detector_efficiency * params.detector_efficiency;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0u64;
    for _ in 0..trials {
        let links_ok = (0..spec.elementary_links()).all(|_| draw_link(&mut rng, &slots));
        if links_ok && (0..spec.repeaters).all(|_| rng.gen::<f64>() < swap) {
            successes += 1;
        }
    }
    Ok(McEstimate::from_counts(successes, trials, seed))
}
