//! Received-signal-strength model.
//!
//! The receiver observes `y = sqrt(P) * sum_i a_i exp(j(phi_i + psi_i)) + w`, where
//! `a_i exp(j phi_i)` is node `i`'s channel and `psi_i` the phase it transmits with.
//! Every algorithm in this crate maximizes `|y|` using nothing but scalar
//! observations of it.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stable identifier of a transmitting node. Never reused within a trial.
pub type NodeId = u64;

/// Reduces `theta` into `(-pi, pi]`.
///
/// Values already inside the range are returned untouched, which makes the
/// reduction exactly idempotent.
pub fn canonical_phase(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::contract(format!("phase must be finite, got {theta}")));
    }
    Ok(wrap_phase(theta))
}

/// Infallible form of [`canonical_phase`] for values known to be finite.
#[inline]
pub(crate) fn wrap_phase(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Physical channel between every node and the receiver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelState {
    gains: Vec<f64>,
    phases: Vec<f64>,
    tx_power: f64,
    node_ids: Vec<NodeId>,
    next_id: NodeId,
}

impl ChannelState {
    /// Builds a channel with node ids `0..n`.
    pub fn new(gains: Vec<f64>, phases: Vec<f64>, tx_power: f64) -> Result<Self> {
        let ids = (0..gains.len() as NodeId).collect();
        Self::with_ids(gains, phases, tx_power, ids)
    }

    pub fn with_ids(
        gains: Vec<f64>,
        phases: Vec<f64>,
        tx_power: f64,
        node_ids: Vec<NodeId>,
    ) -> Result<Self> {
        if gains.len() != phases.len() || gains.len() != node_ids.len() {
            return Err(Error::contract(format!(
                "gains ({}), phases ({}) and node_ids ({}) must have equal length",
                gains.len(),
                phases.len(),
                node_ids.len()
            )));
        }
        if !(tx_power.is_finite() && tx_power > 0.0) {
            return Err(Error::contract(format!("tx_power must be > 0, got {tx_power}")));
        }
        if let Some(a) = gains.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::contract(format!("gains must be finite and >= 0, got {a}")));
        }
        let phases = phases
            .into_iter()
            .map(canonical_phase)
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = node_ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::contract("node ids must be unique"));
        }
        let next_id = sorted.last().map_or(0, |id| id + 1);
        Ok(Self {
            gains,
            phases,
            tx_power,
            node_ids,
            next_id,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn tx_power(&self) -> f64 {
        self.tx_power
    }

    /// Transmitted symbol amplitude `sqrt(P)`.
    pub fn amplitude(&self) -> f64 {
        self.tx_power.sqrt()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.node_ids.iter().position(|n| *n == id)
    }

    pub(crate) fn phases_mut(&mut self) -> &mut [f64] {
        &mut self.phases
    }

    pub(crate) fn push_node(&mut self, gain: f64, phase: f64) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.gains.push(gain);
        self.phases.push(wrap_phase(phase));
        self.node_ids.push(id);
        id
    }

    pub(crate) fn remove_index(&mut self, index: usize) -> NodeId {
        self.gains.remove(index);
        self.phases.remove(index);
        self.node_ids.remove(index)
    }
}

/// Commanded transmit phases, parallel to a [`ChannelState`]'s node order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(psis: Vec<f64>) -> Result<Self> {
        psis.into_iter()
            .map(canonical_phase)
            .collect::<Result<Vec<_>>>()
            .map(PhaseVector)
    }

    pub fn zeros(n: usize) -> Self {
        PhaseVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Sets entry `i`, reducing it to the canonical range.
    pub fn set(&mut self, i: usize, psi: f64) {
        self.0[i] = wrap_phase(psi);
    }

    /// Adds `delta` to entry `i`.
    pub fn rotate(&mut self, i: usize, delta: f64) {
        self.set(i, self.0[i] + delta);
    }

    /// Adds `delta[i]` to every entry.
    pub fn rotate_all(&mut self, delta: &[f64]) {
        debug_assert_eq!(delta.len(), self.0.len());
        for (p, d) in self.0.iter_mut().zip(delta) {
            *p = wrap_phase(*p + d);
        }
    }

    pub(crate) fn push(&mut self, psi: f64) {
        self.0.push(wrap_phase(psi));
    }

    pub(crate) fn remove(&mut self, i: usize) -> f64 {
        self.0.remove(i)
    }
}

/// One receiver observation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub rss: f64,
    pub slot: u64,
}

fn check_lengths(channel: &ChannelState, phases: &PhaseVector) -> Result<()> {
    if channel.len() != phases.len() {
        return Err(Error::contract(format!(
            "phase vector has {} entries but the channel has {} nodes",
            phases.len(),
            channel.len()
        )));
    }
    Ok(())
}

/// Noiseless received phasor `sqrt(P) * sum_i a_i exp(j(phi_i + psi_i))`.
pub(crate) fn received_phasor(channel: &ChannelState, phases: &[f64]) -> Complex64 {
    let sum: Complex64 = channel
        .gains
        .iter()
        .zip(&channel.phases)
        .zip(phases)
        .map(|((a, phi), psi)| Complex64::from_polar(*a, phi + psi))
        .sum();
    sum * channel.amplitude()
}

/// Noiseless RSS of `phases` over `channel`.
pub fn evaluate_rss(channel: &ChannelState, phases: &PhaseVector) -> Result<f64> {
    check_lengths(channel, phases)?;
    Ok(received_phasor(channel, phases.as_slice()).norm())
}

/// RSS seen through one draw of circularly-symmetric complex Gaussian noise
/// with total variance `noise_power`.
pub fn evaluate_rss_noisy<R: Rng + ?Sized>(
    channel: &ChannelState,
    phases: &PhaseVector,
    noise_power: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(noise_power.is_finite() && noise_power >= 0.0) {
        return Err(Error::contract(format!(
            "noise power must be finite and >= 0, got {noise_power}"
        )));
    }
    check_lengths(channel, phases)?;
    let y = received_phasor(channel, phases.as_slice());
    if noise_power == 0.0 {
        return Ok(y.norm());
    }
    let scale = (noise_power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Ok((y + Complex64::new(re * scale, im * scale)).norm())
}

/// Global maximum of the RSS: `sqrt(P) * sum_i a_i`.
pub fn rss_max(channel: &ChannelState) -> f64 {
    channel.amplitude() * channel.gains.iter().fold(0.0, |acc, a| acc + a)
}

/// Beamforming gain ratio `rss / rss_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainRatio {
    pub value: f64,
    /// Set when a noisy measurement pushed the ratio above 1.
    pub exceeds_unity: bool,
}

/// Computes `rss / rss_max(channel)`. Noiseless ratios are clamped to
/// `[0, 1]`; noisy ones are reported as-is and flagged when above 1.
pub fn gain_ratio(rss: f64, channel: &ChannelState, noiseless: bool) -> Result<GainRatio> {
    if !(rss.is_finite() && rss >= 0.0) {
        return Err(Error::contract(format!("rss must be finite and >= 0, got {rss}")));
    }
    let max = rss_max(channel);
    if max <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let value = rss / max;
    if noiseless {
        Ok(GainRatio {
            value: value.clamp(0.0, 1.0),
            exceeds_unity: false,
        })
    } else {
        Ok(GainRatio {
            value,
            exceeds_unity: value > 1.0,
        })
    }
}
