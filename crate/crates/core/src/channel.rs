//! Channel realizations and their evolution: Rayleigh or equal-gain draws,
//! Gaussian phase random walks, and per-slot node churn.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{wrap_phase, ChannelState, NodeId, PhaseVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Static,
    Noisy,
    Churn,
    TimeVarying,
}

/// Everything that describes the propagation environment of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_kind")]
    pub kind: ScenarioKind,
    /// i.i.d. CN(0, 1) channels when true, `a_i = equal_gain_value` otherwise.
    #[serde(default = "default_true")]
    pub rayleigh: bool,
    #[serde(default = "default_one")]
    pub equal_gain_value: f64,
    /// Noise power relative to unit signal power, in dB. `None` is noiseless.
    #[serde(default)]
    pub noise_power_db: Option<f64>,
    #[serde(default)]
    pub p_add: f64,
    #[serde(default)]
    pub p_remove: f64,
    /// Standard deviation of the per-slot channel phase innovation (radians).
    #[serde(default)]
    pub sigma_xi: f64,
    #[serde(default = "default_nodes")]
    pub n_nodes_initial: usize,
    #[serde(default = "default_one")]
    pub tx_power: f64,
}

fn default_kind() -> ScenarioKind {
    ScenarioKind::Static
}
fn default_true() -> bool {
    true
}
fn default_one() -> f64 {
    1.0
}
fn default_nodes() -> usize {
    100
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Static,
            rayleigh: true,
            equal_gain_value: 1.0,
            noise_power_db: None,
            p_add: 0.0,
            p_remove: 0.0,
            sigma_xi: 0.0,
            n_nodes_initial: 100,
            tx_power: 1.0,
        }
    }
}

impl ScenarioSpec {
    /// Static Rayleigh network of `n` nodes.
    pub fn static_rayleigh(n: usize) -> Self {
        Self {
            n_nodes_initial: n,
            ..Self::default()
        }
    }

    /// Checks ranges and that `kind` agrees with the dynamic fields.
    /// Errors carry the key path relative to the scenario object.
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(
                    format!(".{name}"),
                    format!("probability must lie in [0, 1], got {p}"),
                ))
            }
        };
        prob("p_add", self.p_add)?;
        prob("p_remove", self.p_remove)?;
        if !(self.sigma_xi.is_finite() && self.sigma_xi >= 0.0) {
            return Err(Error::config(".sigma_xi", "must be finite and >= 0"));
        }
        if self.n_nodes_initial < 1 {
            return Err(Error::config(".n_nodes_initial", "must be >= 1"));
        }
        if !(self.equal_gain_value.is_finite() && self.equal_gain_value > 0.0) {
            return Err(Error::config(".equal_gain_value", "must be > 0"));
        }
        if !(self.tx_power.is_finite() && self.tx_power > 0.0) {
            return Err(Error::config(".tx_power", "must be > 0"));
        }
        if let Some(db) = self.noise_power_db {
            if !db.is_finite() {
                return Err(Error::config(".noise_power_db", "must be finite"));
            }
        }
        let churn = self.p_add > 0.0 || self.p_remove > 0.0;
        let noisy = self.noise_power_db.is_some();
        let drifting = self.sigma_xi > 0.0;
        let mismatch = match self.kind {
            ScenarioKind::Static => (noisy || churn || drifting)
                .then_some("static scenarios take no noise, churn or phase drift"),
            ScenarioKind::Noisy => (!noisy).then_some("noisy scenarios need noise_power_db"),
            ScenarioKind::Churn => {
                (!churn).then_some("churn scenarios need p_add > 0 or p_remove > 0")
            }
            ScenarioKind::TimeVarying => {
                (!drifting).then_some("time_varying scenarios need sigma_xi > 0")
            }
        };
        match mismatch {
            Some(msg) => Err(Error::config(".kind", msg)),
            None => Ok(()),
        }
    }

    /// Linear noise variance, `10^(dB/10)`; zero when noiseless.
    pub fn noise_power(&self) -> f64 {
        self.noise_power_db.map_or(0.0, |db| 10f64.powf(db / 10.0))
    }

    pub fn has_churn(&self) -> bool {
        self.p_add > 0.0 || self.p_remove > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Added,
    Removed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyEvent {
    pub slot: u64,
    pub kind: TopologyKind,
    pub node_id: NodeId,
}

fn draw_node<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> (f64, f64) {
    if spec.rayleigh {
        // CN(0, 1): unit total variance split over the two quadratures.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re: f64 = rng.sample::<f64, _>(StandardNormal) * s;
        let im: f64 = rng.sample::<f64, _>(StandardNormal) * s;
        (re.hypot(im), wrap_phase(im.atan2(re)))
    } else {
        (spec.equal_gain_value, uniform_phase(rng))
    }
}

/// Uniform draw on `(-pi, pi]`.
pub(crate) fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    wrap_phase(rng.gen_range(-PI..PI))
}

/// Draws an initial channel realization for `spec.n_nodes_initial` nodes.
pub fn sample_channel<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> ChannelState {
    let n = spec.n_nodes_initial;
    let (gains, phases): (Vec<f64>, Vec<f64>) = (0..n).map(|_| draw_node(spec, rng)).unzip();
    ChannelState::new(gains, phases, spec.tx_power).expect("sampled channel is well-formed")
}

/// In-place form of [`evolve_phases`].
pub fn evolve_phases_in_place<R: Rng + ?Sized>(
    channel: &mut ChannelState,
    sigma_xi: f64,
    rng: &mut R,
) -> Result<()> {
    if !(sigma_xi.is_finite() && sigma_xi >= 0.0) {
        return Err(Error::contract(format!("sigma_xi must be >= 0, got {sigma_xi}")));
    }
    if sigma_xi == 0.0 {
        return Ok(());
    }
    let normal = Normal::new(0.0, sigma_xi).expect("sigma checked above");
    for phi in channel.phases_mut() {
        *phi = wrap_phase(*phi + normal.sample(rng));
    }
    Ok(())
}

/// One step of the Gaussian phase random walk; gains are untouched.
pub fn evolve_phases<R: Rng + ?Sized>(
    channel: &ChannelState,
    sigma_xi: f64,
    rng: &mut R,
) -> Result<ChannelState> {
    let mut next = channel.clone();
    evolve_phases_in_place(&mut next, sigma_xi, rng)?;
    Ok(next)
}

/// In-place form of [`apply_churn`].
pub fn apply_churn_in_place<R: Rng + ?Sized>(
    channel: &mut ChannelState,
    phases: &mut PhaseVector,
    spec: &ScenarioSpec,
    slot: u64,
    rng: &mut R,
) -> Result<Vec<TopologyEvent>> {
    if channel.len() != phases.len() {
        return Err(Error::contract("phase vector and channel differ in length"));
    }
    let mut events = Vec::new();
    if spec.p_add > 0.0 && rng.gen_bool(spec.p_add) {
        let (gain, phase) = draw_node(spec, rng);
        let psi = uniform_phase(rng);
        let node_id = channel.push_node(gain, phase);
        phases.push(psi);
        events.push(TopologyEvent {
            slot,
            kind: TopologyKind::Added,
            node_id,
        });
    }
    if spec.p_remove > 0.0 && rng.gen_bool(spec.p_remove) && !channel.is_empty() {
        let index = rng.gen_range(0..channel.len());
        let node_id = channel.remove_index(index);
        phases.remove(index);
        events.push(TopologyEvent {
            slot,
            kind: TopologyKind::Removed,
            node_id,
        });
    }
    Ok(events)
}

/// Start-of-slot membership update: an add draw, then an independent
/// remove draw. New nodes get a channel drawn like [`sample_channel`] and
/// a uniformly random commanded phase.
pub fn apply_churn<R: Rng + ?Sized>(
    channel: &ChannelState,
    phases: &PhaseVector,
    spec: &ScenarioSpec,
    slot: u64,
    rng: &mut R,
) -> Result<(ChannelState, PhaseVector, Vec<TopologyEvent>)> {
    let mut channel = channel.clone();
    let mut phases = phases.clone();
    let events = apply_churn_in_place(&mut channel, &mut phases, spec, slot, rng)?;
    Ok((channel, phases, events))
}
