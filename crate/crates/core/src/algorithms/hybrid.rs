//! Hybrid: one full D-QESA pass for a fast start, then BioRARSA2 from the
//! phases that pass produced.

use rand_chacha::ChaCha8Rng;

use crate::channel::TopologyEvent;
use crate::model::{Measurement, NodeId, PhaseVector};

use super::biorarsa::{BiorarsaParams, BiorarsaReceiver, BiorarsaTransmitter};
use super::dqesa::{DqesaConfig, DqesaReceiver, DqesaTransmitter};
use super::{FeedbackMessage, ReceiverSide, TransmitterSide};

enum RxMode {
    Deterministic(DqesaReceiver),
    Random(BiorarsaReceiver),
}

pub struct HybridReceiver {
    mode: RxMode,
    params: BiorarsaParams,
    switched_at_next: bool,
}

impl HybridReceiver {
    pub fn new(ids: Vec<NodeId>, cfg: DqesaConfig, tx_power: f64, params: BiorarsaParams) -> Self {
        Self {
            mode: RxMode::Deterministic(DqesaReceiver::new(ids, cfg, tx_power)),
            params,
            switched_at_next: false,
        }
    }

    /// True once the random-search phase has begun.
    pub fn switched(&self) -> bool {
        matches!(self.mode, RxMode::Random(_))
    }

    fn maybe_switch(&mut self) {
        if let RxMode::Deterministic(d) = &self.mode {
            if d.rounds() >= 1 {
                let best = d.recorded_best();
                self.mode = RxMode::Random(BiorarsaReceiver::with_threshold(self.params, best));
                self.switched_at_next = true;
            }
        }
    }
}

impl ReceiverSide for HybridReceiver {
    fn stage(&self) -> &'static str {
        match &self.mode {
            RxMode::Deterministic(d) => d.stage(),
            RxMode::Random(_) if self.switched_at_next => "switch",
            RxMode::Random(b) => b.stage(),
        }
    }

    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage> {
        let out = match &mut self.mode {
            RxMode::Deterministic(d) => d.observe(m),
            RxMode::Random(b) => {
                self.switched_at_next = false;
                b.observe(m)
            }
        };
        self.maybe_switch();
        out
    }

    fn recorded_best(&self) -> f64 {
        match &self.mode {
            RxMode::Deterministic(d) => d.recorded_best(),
            RxMode::Random(b) => b.recorded_best(),
        }
    }

    fn on_topology(&mut self, events: &[TopologyEvent]) {
        match &mut self.mode {
            RxMode::Deterministic(d) => d.on_topology(events),
            RxMode::Random(b) => b.on_topology(events),
        }
        self.maybe_switch();
    }
}

enum TxMode {
    Deterministic(DqesaTransmitter),
    Random(BiorarsaTransmitter),
    /// Transient placeholder while moving between modes.
    Empty,
}

pub struct HybridTransmitter {
    mode: TxMode,
    params: BiorarsaParams,
    rng: Option<ChaCha8Rng>,
}

impl HybridTransmitter {
    pub fn new(
        initial: PhaseVector,
        ids: Vec<NodeId>,
        cfg: DqesaConfig,
        params: BiorarsaParams,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            mode: TxMode::Deterministic(DqesaTransmitter::new(initial, ids, cfg)),
            params,
            rng: Some(rng),
        }
    }

    pub fn switched(&self) -> bool {
        matches!(self.mode, TxMode::Random(_))
    }

    fn maybe_switch(&mut self) {
        let done = matches!(&self.mode, TxMode::Deterministic(d) if d.rounds() >= 1);
        if done {
            if let TxMode::Deterministic(d) = std::mem::replace(&mut self.mode, TxMode::Empty) {
                let rng = self.rng.take().expect("switch happens once");
                self.mode = TxMode::Random(BiorarsaTransmitter::new(d.committed().clone(), self.params, rng));
            }
        }
    }

    fn inner(&self) -> &dyn TransmitterSide {
        match &self.mode {
            TxMode::Deterministic(d) => d,
            TxMode::Random(b) => b,
            TxMode::Empty => unreachable!("mode is restored before returning"),
        }
    }
}

impl TransmitterSide for HybridTransmitter {
    fn transmit(&self) -> &PhaseVector {
        self.inner().transmit()
    }

    fn committed(&self) -> &PhaseVector {
        self.inner().committed()
    }

    fn apply(&mut self, feedback: &[FeedbackMessage]) {
        match &mut self.mode {
            TxMode::Deterministic(d) => d.apply(feedback),
            TxMode::Random(b) => b.apply(feedback),
            TxMode::Empty => {}
        }
        self.maybe_switch();
    }

    fn on_topology(&mut self, events: &[TopologyEvent], committed: &PhaseVector) {
        match &mut self.mode {
            TxMode::Deterministic(d) => d.on_topology(events, committed),
            TxMode::Random(b) => b.on_topology(events, committed),
            TxMode::Empty => {}
        }
        self.maybe_switch();
    }
}
