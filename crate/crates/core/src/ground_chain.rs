//! Terrestrial repeater chain.
//!
//! A chain of `M` repeaters splits the user-to-user fiber into identical
//! elementary links. Each link has a mid-point pair source feeding two fiber
//! arms that end in multimode memories; repeaters join adjacent links by a
//! Bell-state measurement.
//!
//! Throughput uses the at-least-one-pair-in-N-slots success probability.
//! Fidelity is tracked as a Werner parameter, multiplied across devices and
//! degraded at every swap by the dark-count click purity.

use serde::Serialize;

use crate::error::{check_probability, Error, Result};
use crate::memory::MemoryModel;
use crate::params::SystemParams;

/// Fiber lengths below this are treated as no fiber at all.
const MIN_FIBER_LENGTH_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainSpec {
    /// User-to-user fiber distance [m].
    pub distance: f64,
    pub repeaters: u32,
}

impl ChainSpec {
    pub fn new(distance: f64, repeaters: u32) -> Result<Self> {
        if !(distance >= 0.0 && distance.is_finite()) {
            return Err(Error::domain(format!("chain distance must be >= 0, got {distance}")));
        }
        Ok(ChainSpec { distance, repeaters })
    }

    pub fn from_km(distance_km: f64, repeaters: u32) -> Result<Self> {
        Self::new(distance_km * 1e3, repeaters)
    }

    pub fn elementary_links(&self) -> u32 {
        self.repeaters + 1
    }

    /// Length of one elementary link [m].
    pub fn link_length(&self) -> f64 {
        self.distance / f64::from(self.elementary_links())
    }

    /// Source-to-node fiber length [m], zero for degenerate chains.
    pub fn arm_length(&self) -> f64 {
        if self.distance < MIN_FIBER_LENGTH_M {
            0.0
        } else {
            self.link_length() / 2.0
        }
    }
}

/// Rate and fidelity of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundPathResult {
    pub repeaters: u32,
    /// Per-arm fiber transmittance.
    pub eta_channel: f64,
    /// Elementary-link success probability after N slots, before 1/N normalization.
    pub p_elem_unnormalized: f64,
    /// Elementary-link success probability normalized by the mode count.
    pub p_elem: f64,
    pub p_chain: f64,
    /// Delivered pairs per second.
    pub pair_rate: f64,
    pub werner: f64,
    pub fidelity: f64,
}

/// Transmittance of `length` meters of fiber with attenuation `alpha_db_per_km`.
pub fn fiber_efficiency(length: f64, alpha_db_per_km: f64) -> Result<f64> {
    if !(length >= 0.0) {
        return Err(Error::domain(format!("fiber length must be >= 0, got {length}")));
    }
    Ok(10f64.powf(-alpha_db_per_km * (length / 1e3) / 10.0))
}

/// Probability that slot `k` heralds a pair into both memories.
pub fn slot_success_prob(params: &SystemParams, eta_ch: f64, k: u32) -> Result<f64> {
    check_probability("eta_ch", eta_ch)?;
    let qm = MemoryModel::from_params(params).mode_efficiency(k)?;
    Ok(params.source_efficiency * eta_ch * eta_ch * qm * qm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElemSuccess {
    pub unnormalized: f64,
    pub normalized: f64,
}

/// Probability of at least one heralded pair on an elementary link within
/// the N memory slots, raw and divided by N.
pub fn elem_success_prob(params: &SystemParams, eta_ch: f64) -> Result<ElemSuccess> {
    check_probability("eta_ch", eta_ch)?;
    let memory = MemoryModel::from_params(params);
    let per_pair = params.source_efficiency * eta_ch * eta_ch;
    // Summed in log space so that tiny per-slot probabilities do not cancel.
    let log_all_fail: f64 = memory
        .efficiencies()
        .map(|qm| (-per_pair * qm * qm).ln_1p())
        .sum();
    let unnormalized = -log_all_fail.exp_m1();
    Ok(ElemSuccess {
        unnormalized,
        normalized: unnormalized / f64::from(params.qm_modes),
    })
}

fn arm_efficiency(params: &SystemParams, spec: &ChainSpec) -> Result<f64> {
    fiber_efficiency(spec.arm_length(), params.fiber_attenuation)
}

/// Un-normalized chain success: every link and every swap succeeds.
pub fn chain_success_numerator(params: &SystemParams, spec: &ChainSpec) -> Result<f64> {
    let elem = elem_success_prob(params, arm_efficiency(params, spec)?)?;
    Ok(chain_numerator_from(params, elem.unnormalized, spec.repeaters))
}

fn chain_numerator_from(params: &SystemParams, unnormalized: f64, repeaters: u32) -> f64 {
    let m = repeaters as i32;
    unnormalized.powi(m + 1)
        * params.bsm_efficiency.powi(m)
        * params.detector_efficiency.powi(2 * m)
}

/// End-to-end success probability, normalized once by N.
pub fn chain_success_prob(params: &SystemParams, spec: &ChainSpec) -> Result<f64> {
    Ok(chain_success_numerator(params, spec)? / f64::from(params.qm_modes))
}

/// Delivered pairs per second at the end users.
pub fn ground_pair_rate(params: &SystemParams, spec: &ChainSpec) -> Result<f64> {
    Ok(params.source_rate * chain_success_prob(params, spec)?)
}

/// Werner parameter of one elementary link with the given channel fidelity.
pub fn elem_werner(params: &SystemParams, channel_fidelity: f64) -> f64 {
    let e = params.fidelity_arm_convention.exponent();
    params.source_fidelity * channel_fidelity.powi(e) * params.qm_fidelity.powi(e)
}

/// Probability that a detector click comes from a source photon rather than
/// a dark count.
pub fn click_true_prob(params: &SystemParams, p_elem: f64) -> Result<f64> {
    check_probability("p_elem", p_elem)?;
    let true_rate = params.source_rate * p_elem;
    let total = true_rate + params.dark_count_rate;
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "no clicks: both source and dark-count rates are zero".into(),
        ));
    }
    Ok(true_rate / total)
}

/// Werner parameter of the whole chain.
pub fn chain_werner(params: &SystemParams, spec: &ChainSpec) -> Result<f64> {
    let elem = elem_success_prob(params, arm_efficiency(params, spec)?)?;
    chain_werner_from(params, spec.repeaters, elem.normalized)
}

fn chain_werner_from(params: &SystemParams, repeaters: u32, p_elem: f64) -> Result<f64> {
    let (links, swaps) = params.fidelity_link_convention.counts(repeaters);
    let device = elem_werner(params, params.fiber_fidelity).powi(links as i32);
    if swaps == 0 {
        return Ok(device);
    }
    // Identical links: both factors of every swap are the same click purity.
    let click = click_true_prob(params, p_elem)?;
    Ok(device * click.powi(2 * swaps as i32))
}

/// Fidelity to the target Bell state of a Werner state with parameter `w`.
pub fn fidelity_from_werner(w: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::domain(format!("Werner parameter must lie in [0, 1], got {w}")));
    }
    Ok((1.0 + 3.0 * w) / 4.0)
}

pub fn evaluate_ground_path(params: &SystemParams, spec: &ChainSpec) -> Result<GroundPathResult> {
    let eta_channel = arm_efficiency(params, spec)?;
    let elem = elem_success_prob(params, eta_channel)?;
    let p_chain =
        chain_numerator_from(params, elem.unnormalized, spec.repeaters) / f64::from(params.qm_modes);
    let werner = chain_werner_from(params, spec.repeaters, elem.normalized)?;
    Ok(GroundPathResult {
        repeaters: spec.repeaters,
        eta_channel,
        p_elem_unnormalized: elem.unnormalized,
        p_elem: elem.normalized,
        p_chain,
        pair_rate: params.source_rate * p_chain,
        werner,
        fidelity: fidelity_from_werner(werner)?,
    })
}

/// Outcome of the repeater-count search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RepeaterOptimum {
    Feasible { repeaters: u32, result: GroundPathResult },
    /// No repeater count in range meets the fidelity floor.
    Infeasible,
}

impl RepeaterOptimum {
    pub fn result(&self) -> Option<&GroundPathResult> {
        match self {
            RepeaterOptimum::Feasible { result, .. } => Some(result),
            RepeaterOptimum::Infeasible => None,
        }
    }
}

pub const DEFAULT_MAX_REPEATERS: u32 = 20;

/// Evaluates every repeater count in `0..=m_max` at the given distance [m].
///
/// Counts whose fidelity is undefined (no clicks at all) are skipped.
pub fn sweep_repeaters(params: &SystemParams, distance: f64, m_max: u32) -> Result<Vec<GroundPathResult>> {
    let mut out = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        match evaluate_ground_path(params, &ChainSpec::new(distance, m)?) {
            Ok(r) => out.push(r),
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Repeater count maximizing pair rate subject to `fidelity >= fidelity_min`.
///
/// Ties go to the smaller count.
pub fn optimize_repeaters(
    params: &SystemParams,
    distance: f64,
    fidelity_min: f64,
    m_max: u32,
) -> Result<RepeaterOptimum> {
    if !(0.25..1.0).contains(&fidelity_min) {
        return Err(Error::domain(format!(
            "fidelity floor must lie in [0.25, 1), got {fidelity_min}"
        )));
    }
    let best = sweep_repeaters(params, distance, m_max)?
        .into_iter()
        .filter(|r| r.fidelity >= fidelity_min)
        .fold(None::<GroundPathResult>, |best, r| match best {
            Some(b) if b.pair_rate >= r.pair_rate => Some(b),
            _ => Some(r),
        });
    Ok(match best {
        Some(result) => RepeaterOptimum::Feasible {
            repeaters: result.repeaters,
            result,
        },
        None => RepeaterOptimum::Infeasible,
    })
}
