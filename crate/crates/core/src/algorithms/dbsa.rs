//! Deterministic bisection search.
//!
//! One node moves at a time and only when the receiver's one-bit feedback
//! reports a new best RSS. An initial sweep tries every multiple of `alpha`
//! for each node; afterwards each pass tries `+alpha` then `-alpha` per node
//! and halves `alpha` at the end of the pass.

use std::f64::consts::TAU;

use crate::channel::TopologyEvent;
use crate::error::{Error, Result};
use crate::model::{Measurement, NodeId, PhaseVector};

use super::{FeedbackMessage, ReceiverSide, RoundRobin, TransmitterSide};

/// Number of grid points `K = 2*pi / alpha`; `alpha` must divide `2*pi`.
pub fn sweep_size(alpha: f64) -> Result<usize> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::contract(format!("alpha must be > 0, got {alpha}")));
    }
    let k = (TAU / alpha).round();
    if k < 2.0 || (k * alpha - TAU).abs() > 1e-9 {
        return Err(Error::contract(format!("alpha = {alpha} does not divide 2*pi")));
    }
    Ok(k as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbsaStage {
    /// Baseline measurement of the initial phases.
    Init,
    /// Initial rotation: testing `base + j * alpha` for the current node.
    Sweep { j: usize },
    Forward,
    Reverse,
    /// No nodes to adjust.
    Idle,
}

/// Protocol state both halves advance in lockstep.
#[derive(Clone, Debug)]
struct Schedule {
    rr: RoundRobin,
    alpha: f64,
    k: usize,
    stage: DbsaStage,
    swept: bool,
}

impl Schedule {
    fn new(ids: Vec<NodeId>, alpha: f64) -> Self {
        let k = sweep_size(alpha).expect("alpha validated by the caller");
        Self {
            rr: RoundRobin::new(ids),
            alpha,
            k,
            stage: DbsaStage::Init,
            swept: false,
        }
    }

    fn first_stage(&self) -> DbsaStage {
        if self.rr.current().is_none() {
            DbsaStage::Idle
        } else if self.swept {
            DbsaStage::Forward
        } else {
            DbsaStage::Sweep { j: 1 }
        }
    }

    fn node_done(&mut self) {
        if self.rr.advance() {
            self.alpha /= 2.0;
            self.swept = true;
        }
        self.stage = self.first_stage();
    }

    fn advance(&mut self, bit: Option<bool>) {
        match self.stage {
            DbsaStage::Init | DbsaStage::Idle => self.stage = self.first_stage(),
            DbsaStage::Sweep { j } => {
                if j + 1 < self.k {
                    self.stage = DbsaStage::Sweep { j: j + 1 };
                } else {
                    self.node_done();
                }
            }
            DbsaStage::Forward => {
                if bit == Some(true) {
                    self.node_done();
                } else {
                    self.stage = DbsaStage::Reverse;
                }
            }
            DbsaStage::Reverse => self.node_done(),
        }
    }

    fn restart(&mut self, events: &[TopologyEvent]) {
        if self.rr.apply(events) {
            self.alpha /= 2.0;
            self.swept = true;
        }
        if self.stage != DbsaStage::Init {
            self.stage = self.first_stage();
        }
    }

    fn tag(&self) -> &'static str {
        match self.stage {
            DbsaStage::Init => "init",
            DbsaStage::Sweep { .. } => "sweep",
            DbsaStage::Forward => "forward",
            DbsaStage::Reverse => "reverse",
            DbsaStage::Idle => "idle",
        }
    }
}

pub struct DbsaReceiver {
    sched: Schedule,
    best: f64,
}

impl DbsaReceiver {
    pub fn new(ids: Vec<NodeId>, alpha_init: f64) -> Self {
        Self {
            sched: Schedule::new(ids, alpha_init),
            best: 0.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.sched.alpha
    }

    pub fn stage_detail(&self) -> DbsaStage {
        self.sched.stage
    }
}

impl ReceiverSide for DbsaReceiver {
    fn stage(&self) -> &'static str {
        self.sched.tag()
    }

    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage> {
        let out = match self.sched.stage {
            DbsaStage::Init => {
                self.best = m.rss;
                Vec::new()
            }
            DbsaStage::Idle => Vec::new(),
            _ => {
                let improved = m.rss > self.best;
                if improved {
                    self.best = m.rss;
                }
                vec![FeedbackMessage::OneBit(improved)]
            }
        };
        let bit = out.first().and_then(FeedbackMessage::bit);
        self.sched.advance(bit);
        out
    }

    fn recorded_best(&self) -> f64 {
        self.best
    }

    fn on_topology(&mut self, events: &[TopologyEvent]) {
        self.sched.restart(events);
    }
}

pub struct DbsaTransmitter {
    sched: Schedule,
    committed: PhaseVector,
    outgoing: PhaseVector,
    sweep_base: f64,
}

impl DbsaTransmitter {
    pub fn new(initial: PhaseVector, ids: Vec<NodeId>, alpha_init: f64) -> Self {
        let mut tx = Self {
            sched: Schedule::new(ids, alpha_init),
            outgoing: initial.clone(),
            committed: initial,
            sweep_base: 0.0,
        };
        tx.refresh();
        tx
    }

    fn trial_phase(&self, i: usize) -> Option<f64> {
        match self.sched.stage {
            DbsaStage::Sweep { j } => Some(self.sweep_base + j as f64 * self.sched.alpha),
            DbsaStage::Forward => Some(self.committed.get(i) + self.sched.alpha),
            DbsaStage::Reverse => Some(self.committed.get(i) - self.sched.alpha),
            DbsaStage::Init | DbsaStage::Idle => None,
        }
    }

    fn refresh(&mut self) {
        if let (DbsaStage::Sweep { j: 1 }, Some(i)) = (self.sched.stage, self.sched.rr.current()) {
            self.sweep_base = self.committed.get(i);
        }
        self.outgoing.clone_from(&self.committed);
        if let Some(i) = self.sched.rr.current() {
            if let Some(p) = self.trial_phase(i) {
                self.outgoing.set(i, p);
            }
        }
    }
}

impl TransmitterSide for DbsaTransmitter {
    fn transmit(&self) -> &PhaseVector {
        &self.outgoing
    }

    fn committed(&self) -> &PhaseVector {
        &self.committed
    }

    fn apply(&mut self, feedback: &[FeedbackMessage]) {
        let bit = feedback.first().and_then(FeedbackMessage::bit);
        if bit == Some(true) {
            if let Some(i) = self.sched.rr.current() {
                let p = self.trial_phase(i).expect("a bit only follows a trial slot");
                self.committed.set(i, p);
            }
        }
        self.sched.advance(bit);
        self.refresh();
    }

    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector) {
        self.committed.clone_from(committed);
        self.sched.restart(events);
        self.refresh();
    }
}
