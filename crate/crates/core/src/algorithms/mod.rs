//! Adaptive beamforming algorithms.
//!
//! Every algorithm is split into a [`ReceiverSide`] and a [`TransmitterSide`].
//! The receiver sees one RSS measurement per slot and answers with feedback
//! messages; the transmitters see only those messages. Both halves run the
//! same protocol schedule, so the transmitters always know which slot comes
//! next without ever looking at a measurement. [`Split`] glues the halves
//! into a single [`Beamformer`] that the harness drives slot by slot.

use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{TopologyEvent, TopologyKind};
use crate::error::{Error, Result};
use crate::model::{Measurement, NodeId, PhaseVector};

pub mod biorarsa;
pub mod dbsa;
pub mod dqesa;
pub mod hybrid;
pub mod one_bit;
pub mod quantize;
pub mod solve;

pub use biorarsa::{BiorarsaParams, BiorarsaReceiver, BiorarsaTransmitter};
pub use dbsa::{DbsaReceiver, DbsaTransmitter};
pub use dqesa::{DqesaReceiver, DqesaTransmitter, DqesaVariant};
pub use hybrid::{HybridReceiver, HybridTransmitter};
pub use one_bit::{OneBitReceiver, OneBitTransmitter};
pub use quantize::{quantize_beta, AngleFeedback, Quantized};
pub use solve::{solve_three, solve_two, ThreeSolution, TwoSolution};

/// What crosses the reverse link from the receiver to the transmitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMessage {
    /// Explicit "no information": the addressed node leaves its phase alone.
    None,
    OneBit(bool),
    QuantizedAngle { value: f64, bits: u8 },
    ExactAngle(f64),
}

impl FeedbackMessage {
    pub fn bit(&self) -> Option<bool> {
        match self {
            FeedbackMessage::OneBit(b) => Some(*b),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            FeedbackMessage::QuantizedAngle { value, .. } | FeedbackMessage::ExactAngle(value) => {
                Some(*value)
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    Dbsa,
    Dqesa,
    DqesaE,
    Hybrid,
    OneBitRandom,
    Biorarsa2,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 6] = [
        AlgorithmKind::Dbsa,
        AlgorithmKind::Dqesa,
        AlgorithmKind::DqesaE,
        AlgorithmKind::Hybrid,
        AlgorithmKind::OneBitRandom,
        AlgorithmKind::Biorarsa2,
    ];

    /// Whether the algorithm sends angles (and so depends on the feedback
    /// width) rather than single bits only.
    pub fn uses_angle_feedback(&self) -> bool {
        matches!(self, AlgorithmKind::Dqesa | AlgorithmKind::DqesaE | AlgorithmKind::Hybrid)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AlgorithmKind::Dbsa => "dbsa",
            AlgorithmKind::Dqesa => "dqesa",
            AlgorithmKind::DqesaE => "dqesa_e",
            AlgorithmKind::Hybrid => "hybrid",
            AlgorithmKind::OneBitRandom => "one_bit_random",
            AlgorithmKind::Biorarsa2 => "biorarsa2",
        }
    }
}

/// How the sign of an arccos-recovered angle gets resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    /// Apply `-beta`; if the next slot reads below the pre-update RSS, apply
    /// `+2 beta` and measure again (one extra slot per miss).
    Probe,
    /// Always apply `-beta`, never check.
    Optimistic,
    /// Like `Probe`, but after a miss the receiver predicts the corrected RSS
    /// from the values it already solved for instead of re-measuring it, so a
    /// miss costs no slot.
    Predict,
}

/// Tunables for every algorithm. Each field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmParams {
    /// Initial DBSA adjustment angle; must divide 2*pi.
    pub dbsa_alpha_init: f64,
    pub sign_mode: SignMode,
    /// Dead zone scale: angles below `factor * (pi/2) / 2^(K+1)` send nothing.
    pub dead_zone_factor: f64,
    /// Per-node perturbation half-width of the one-bit random baseline.
    pub one_bit_delta: f64,
    pub biorarsa: BiorarsaParams,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            dbsa_alpha_init: PI / 2.0,
            sign_mode: SignMode::Predict,
            dead_zone_factor: 0.25,
            one_bit_delta: PI / 18.0,
            biorarsa: BiorarsaParams::default(),
        }
    }
}

impl AlgorithmParams {
    /// Validates ranges. Error paths are relative to the params object.
    pub fn validate(&self) -> Result<()> {
        dbsa::sweep_size(self.dbsa_alpha_init)
            .map_err(|e| Error::config(".dbsa_alpha_init", e.to_string()))?;
        if !(self.dead_zone_factor.is_finite() && (0.0..=1.0).contains(&self.dead_zone_factor)) {
            return Err(Error::config(".dead_zone_factor", "must lie in [0, 1]"));
        }
        if !(self.one_bit_delta.is_finite() && self.one_bit_delta > 0.0) {
            return Err(Error::config(".one_bit_delta", "must be > 0"));
        }
        self.biorarsa
            .validate()
            .map_err(|e| match e {
                Error::Config { path, message } => {
                    Error::config(format!(".biorarsa{path}"), message)
                }
                other => other,
            })
    }
}

/// Receiver half of an algorithm.
pub trait ReceiverSide: Send {
    /// Tag describing the slot about to be measured.
    fn stage(&self) -> &'static str;
    /// Consumes the measurement of the slot described by [`stage`](Self::stage).
    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage>;
    /// Highest RSS the receiver holds as its comparison threshold.
    fn recorded_best(&self) -> f64;
    fn on_topology(&mut self, events: &[TopologyEvent]);
}

/// Transmitter half of an algorithm. Sees feedback, never measurements.
pub trait TransmitterSide: Send {
    /// Phases to transmit in the coming slot.
    fn transmit(&self) -> &PhaseVector;
    /// Operating point: the phases the network has settled on so far.
    fn committed(&self) -> &PhaseVector;
    fn apply(&mut self, feedback: &[FeedbackMessage]);
    /// Adopts a membership change. `committed` is the post-churn phase
    /// vector, parallel to the new node order.
    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector);
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub stage: &'static str,
    pub feedback: Vec<FeedbackMessage>,
}

/// A complete algorithm as the harness sees it.
pub trait Beamformer: Send {
    fn transmit(&self) -> &PhaseVector;
    fn committed(&self) -> &PhaseVector;
    fn step(&mut self, m: &Measurement) -> StepReport;
    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector);
    fn recorded_best(&self) -> f64;
    fn stage(&self) -> &'static str;
}

/// Receiver and transmitter halves wired back to back.
pub struct Split<R, T> {
    pub receiver: R,
    pub transmitter: T,
}

impl<R: ReceiverSide, T: TransmitterSide> Beamformer for Split<R, T> {
    fn transmit(&self) -> &PhaseVector {
        self.transmitter.transmit()
    }

    fn committed(&self) -> &PhaseVector {
        self.transmitter.committed()
    }

    fn step(&mut self, m: &Measurement) -> StepReport {
        let stage = self.receiver.stage();
        let feedback = self.receiver.observe(m);
        self.transmitter.apply(&feedback);
        StepReport { stage, feedback }
    }

    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector) {
        self.receiver.on_topology(events);
        self.transmitter.on_topology(events, committed);
    }

    fn recorded_best(&self) -> f64 {
        self.receiver.recorded_best()
    }

    fn stage(&self) -> &'static str {
        self.receiver.stage()
    }
}

/// Everything needed to instantiate an algorithm for one trial.
#[derive(Clone, Debug)]
pub struct AlgorithmSetup {
    pub kind: AlgorithmKind,
    pub feedback: AngleFeedback,
    pub params: AlgorithmParams,
    pub tx_power: f64,
    pub initial: PhaseVector,
    pub node_ids: Vec<NodeId>,
    /// Seed of the transmitters' private random stream.
    pub rng: ChaCha8Rng,
}

/// Builds the beamformer described by `setup`.
pub fn build(setup: AlgorithmSetup) -> Box<dyn Beamformer> {
    let (rx, tx) = build_halves(setup);
    Box::new(Split {
        receiver: rx,
        transmitter: tx,
    })
}

/// Builds the two halves separately, so the transmitter can be replayed on
/// its own against a recorded feedback stream.
pub fn build_halves(setup: AlgorithmSetup) -> (Box<dyn ReceiverSide>, Box<dyn TransmitterSide>) {
    let AlgorithmSetup {
        kind,
        feedback,
        params,
        tx_power,
        initial,
        node_ids,
        rng,
    } = setup;
    match kind {
        AlgorithmKind::Dbsa => {
            let alpha = params.dbsa_alpha_init;
            (
                Box::new(DbsaReceiver::new(node_ids.clone(), alpha)),
                Box::new(DbsaTransmitter::new(initial, node_ids, alpha)),
            )
        }
        AlgorithmKind::Dqesa | AlgorithmKind::DqesaE => {
            let variant = if kind == AlgorithmKind::Dqesa {
                DqesaVariant::PerNode
            } else {
                DqesaVariant::SharedGain
            };
            let cfg = dqesa::DqesaConfig {
                variant,
                feedback,
                sign_mode: params.sign_mode,
                dead_zone_factor: params.dead_zone_factor,
            };
            (
                Box::new(DqesaReceiver::new(node_ids.clone(), cfg, tx_power)),
                Box::new(DqesaTransmitter::new(initial, node_ids, cfg)),
            )
        }
        AlgorithmKind::Hybrid => {
            let cfg = dqesa::DqesaConfig {
                variant: DqesaVariant::PerNode,
                feedback,
                sign_mode: params.sign_mode,
                dead_zone_factor: params.dead_zone_factor,
            };
            (
                Box::new(HybridReceiver::new(node_ids.clone(), cfg, tx_power, params.biorarsa)),
                Box::new(HybridTransmitter::new(initial, node_ids, cfg, params.biorarsa, rng)),
            )
        }
        AlgorithmKind::OneBitRandom => (
            Box::new(OneBitReceiver::new()),
            Box::new(OneBitTransmitter::new(initial, params.one_bit_delta, rng)),
        ),
        AlgorithmKind::Biorarsa2 => (
            Box::new(BiorarsaReceiver::new(params.biorarsa)),
            Box::new(BiorarsaTransmitter::new(initial, params.biorarsa, rng)),
        ),
    }
}

impl<R: ReceiverSide + ?Sized> ReceiverSide for Box<R> {
    fn stage(&self) -> &'static str {
        (**self).stage()
    }
    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage> {
        (**self).observe(m)
    }
    fn recorded_best(&self) -> f64 {
        (**self).recorded_best()
    }
    fn on_topology(&mut self, events: &[TopologyEvent]) {
        (**self).on_topology(events)
    }
}

impl<T: TransmitterSide + ?Sized> TransmitterSide for Box<T> {
    fn transmit(&self) -> &PhaseVector {
        (**self).transmit()
    }
    fn committed(&self) -> &PhaseVector {
        (**self).committed()
    }
    fn apply(&mut self, feedback: &[FeedbackMessage]) {
        (**self).apply(feedback)
    }
    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector) {
        (**self).on_topology(events, committed)
    }
}

/// Round-robin cursor over the current node membership. Shared by both halves
/// of the per-node algorithms so they agree on whose turn it is.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct RoundRobin {
    ids: Vec<NodeId>,
    cursor: usize,
    /// Completed passes over the membership.
    rounds: u64,
}

impl RoundRobin {
    pub(crate) fn new(ids: Vec<NodeId>) -> Self {
        Self {
            ids,
            cursor: 0,
            rounds: 0,
        }
    }

    /// Index of the node whose turn it is, `None` for an empty network.
    pub(crate) fn current(&self) -> Option<usize> {
        (self.cursor < self.ids.len()).then_some(self.cursor)
    }

    pub(crate) fn current_id(&self) -> Option<NodeId> {
        self.current().map(|i| self.ids[i])
    }

    pub(crate) fn rounds(&self) -> u64 {
        self.rounds
    }

    pub(crate) fn position(&self, id: NodeId) -> Option<usize> {
        self.ids.iter().position(|x| *x == id)
    }

    /// Moves to the next node; returns true when a pass just completed.
    pub(crate) fn advance(&mut self) -> bool {
        self.cursor += 1;
        if self.cursor >= self.ids.len() {
            self.cursor = 0;
            self.rounds += 1;
            true
        } else {
            false
        }
    }

    /// Mirrors churn. Removing the current node hands the turn to its
    /// successor; added nodes queue at the end of the pass. Returns true
    /// when the pass completed as a side effect of a removal.
    pub(crate) fn apply(&mut self, events: &[TopologyEvent]) -> bool {
        let mut wrapped = false;
        for ev in events {
            match ev.kind {
                TopologyKind::Added => self.ids.push(ev.node_id),
                TopologyKind::Removed => {
                    if let Some(k) = self.ids.iter().position(|id| *id == ev.node_id) {
                        self.ids.remove(k);
                        if k < self.cursor {
                            self.cursor -= 1;
                        }
                        if self.cursor >= self.ids.len() && self.cursor > 0 {
                            self.cursor = 0;
                            self.rounds += 1;
                            wrapped = true;
                        }
                    }
                }
            }
        }
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(kind: TopologyKind, node_id: NodeId) -> TopologyEvent {
        TopologyEvent {
            slot: 0,
            kind,
            node_id,
        }
    }

    #[test]
    fn round_robin_handles_removal_of_current() {
        let mut rr = RoundRobin::new(vec![10, 11, 12]);
        rr.advance();
        assert_eq!(rr.current_id(), Some(11));
        rr.apply(&[ev(TopologyKind::Removed, 11)]);
        assert_eq!(rr.current_id(), Some(12));
        rr.apply(&[ev(TopologyKind::Removed, 10)]);
        assert_eq!(rr.current_id(), Some(12));
        assert!(rr.apply(&[ev(TopologyKind::Removed, 12)]) || rr.current().is_none());
        assert_eq!(rr.current(), None);
        rr.apply(&[ev(TopologyKind::Added, 20)]);
        assert_eq!(rr.current_id(), Some(20));
    }

    #[test]
    fn round_robin_counts_passes() {
        let mut rr = RoundRobin::new(vec![1, 2]);
        assert!(!rr.advance());
        assert!(rr.advance());
        assert_eq!(rr.rounds(), 1);
        rr.apply(&[ev(TopologyKind::Added, 3)]);
        assert!(!rr.advance());
        assert!(!rr.advance());
        assert!(rr.advance());
        assert_eq!(rr.rounds(), 2);
    }

    #[test]
    fn params_validation() {
        assert!(AlgorithmParams::default().validate().is_ok());
        let bad = AlgorithmParams {
            dbsa_alpha_init: 1.0,
            ..AlgorithmParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
