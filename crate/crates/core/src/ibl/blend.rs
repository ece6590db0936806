//! Activation, retrieval probability and blended value.

use rand::{Rng, RngCore};

use super::memory::MemoryStore;
use super::IblParams;
use crate::error::{Error, Result};
use crate::gridworld::{Action, Position};

/// Supplies the uniform draws `ξ ∈ (0, 1)` behind activation noise.
pub trait XiSource {
    fn next_xi(&mut self) -> f64;
}

impl<R: RngCore> XiSource for R {
    fn next_xi(&mut self) -> f64 {
        loop {
            let u: f64 = self.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

/// A constant draw. `FixedXi(0.5)` makes the noise term exactly zero.
#[derive(Clone, Copy, Debug)]
pub struct FixedXi(pub f64);

impl XiSource for FixedXi {
    fn next_xi(&mut self) -> f64 {
        self.0
    }
}

/// Base-level activation of a slot at time `now` plus logistic noise:
/// `ln Σ (now - t')^-d + σ ln((1 - ξ) / ξ)` over stored times `t' < now`.
pub fn activation(memory: &MemoryStore, slot: usize, now: u64, params: &IblParams, xi: f64) -> Result<f64> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Parameter(format!("noise draw must lie in (0, 1), got {xi}")));
    }
    let base: f64 = memory
        .slot(slot)
        .occurrences
        .iter()
        .take_while(|t| **t < now)
        .map(|t| ((now - t) as f64).powf(-params.decay))
        .sum();
    if base == 0.0 {
        return Err(Error::Undefined(format!("slot {slot} has no occurrence before time {now}")));
    }
    Ok(base.ln() + params.noise * ((1.0 - xi) / xi).ln())
}

/// One participant in a retrieval. `slot` is `None` for the default-utility
/// pseudo-instance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Retrieved {
    pub slot: Option<usize>,
    pub probability: f64,
    pub outcome: f64,
}

/// Boltzmann retrieval probabilities `exp(Λ_i/τ) / Σ_j exp(Λ_j/τ)` over the
/// instances stored for `(observation, action)` before `now`. An unseen
/// choice yields the default-utility pseudo-instance with probability 1.
pub fn retrieval_probabilities(
    memory: &MemoryStore,
    observation: Position,
    action: Action,
    now: u64,
    params: &IblParams,
    noise: &mut impl XiSource,
) -> Result<Vec<Retrieved>> {
    let tau = params.temperature();
    let mut scored = Vec::new();
    for &slot in memory.matching(observation, action) {
        if memory.slot(slot).occurrences.first().is_none_or(|t| *t >= now) {
            continue;
        }
        let lambda = activation(memory, slot, now, params, noise.next_xi())?;
        scored.push((slot, lambda));
    }
    if scored.is_empty() {
        return Ok(vec![Retrieved {
            slot: None,
            probability: 1.0,
            outcome: params.default_utility,
        }]);
    }
    let activations: Vec<f64> = scored.iter().map(|(_, lambda)| *lambda).collect();
    let probabilities = boltzmann(&activations, tau);
    Ok(scored
        .iter()
        .zip(probabilities)
        .map(|(&(slot, _), probability)| Retrieved {
            slot: Some(slot),
            probability,
            outcome: memory.slot(slot).instance.outcome,
        })
        .collect())
}

/// `exp(Λ_i/τ) / Σ_j exp(Λ_j/τ)`, shifted by the maximum for stability.
pub fn boltzmann(activations: &[f64], tau: f64) -> Vec<f64> {
    let max = activations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = activations.iter().map(|a| ((a - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Blended value `V = Σ p_i x_i` of taking `action` at `observation`.
pub fn blended_value(
    memory: &MemoryStore,
    observation: Position,
    action: Action,
    now: u64,
    params: &IblParams,
    noise: &mut impl XiSource,
) -> Result<f64> {
    let retrieved = retrieval_probabilities(memory, observation, action, now, params, noise)?;
    Ok(retrieved.iter().map(|r| r.probability * r.outcome).sum())
}
