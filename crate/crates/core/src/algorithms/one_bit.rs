//! One-bit random perturbation baseline.
//!
//! Every slot all nodes add an independent uniform perturbation; the
//! receiver answers with one bit saying whether the RSS beat its record, and
//! the nodes keep or drop the perturbation accordingly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::TopologyEvent;
use crate::model::{Measurement, PhaseVector};

use super::{FeedbackMessage, ReceiverSide, TransmitterSide};

pub struct OneBitReceiver {
    started: bool,
    best: f64,
}

impl OneBitReceiver {
    pub fn new() -> Self {
        Self {
            started: false,
            best: 0.0,
        }
    }
}

impl Default for OneBitReceiver {
    fn default() -> Self {
        Self::new()
    }
}

impl ReceiverSide for OneBitReceiver {
    fn stage(&self) -> &'static str {
        if self.started {
            "perturb"
        } else {
            "init"
        }
    }

    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage> {
        if !self.started {
            self.started = true;
            self.best = m.rss;
            return Vec::new();
        }
        let improved = m.rss > self.best;
        if improved {
            self.best = m.rss;
        }
        vec![FeedbackMessage::OneBit(improved)]
    }

    fn recorded_best(&self) -> f64 {
        self.best
    }

    // The record survives churn; it goes stale until beaten.
    fn on_topology(&mut self, _events: &[TopologyEvent]) {}
}

pub struct OneBitTransmitter {
    started: bool,
    delta: f64,
    rng: ChaCha8Rng,
    committed: PhaseVector,
    perturbation: Vec<f64>,
    outgoing: PhaseVector,
}

impl OneBitTransmitter {
    pub fn new(initial: PhaseVector, delta: f64, rng: ChaCha8Rng) -> Self {
        Self {
            started: false,
            delta,
            rng,
            outgoing: initial.clone(),
            perturbation: vec![0.0; initial.len()],
            committed: initial,
        }
    }

    fn draw(&mut self) {
        let d = self.delta;
        self.perturbation.clear();
        for _ in 0..self.committed.len() {
            self.perturbation.push(self.rng.gen_range(-d..=d));
        }
        self.outgoing.clone_from(&self.committed);
        self.outgoing.rotate_all(&self.perturbation);
    }
}

impl TransmitterSide for OneBitTransmitter {
    fn transmit(&self) -> &PhaseVector {
        &self.outgoing
    }

    fn committed(&self) -> &PhaseVector {
        &self.committed
    }

    fn apply(&mut self, feedback: &[FeedbackMessage]) {
        if self.started && feedback.first().and_then(FeedbackMessage::bit) == Some(true) {
            self.committed.clone_from(&self.outgoing);
        }
        self.started = true;
        self.draw();
    }

    fn on_topology(&mut self, _events: &[TopologyEvent], committed: &PhaseVector) {
        self.committed.clone_from(committed);
        if self.started {
            self.draw();
        } else {
            self.outgoing.clone_from(committed);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{Beamformer, Split};
    use crate::model::{evaluate_rss, rss_max, ChannelState};
    use rand::SeedableRng;

    #[test]
    fn keeps_only_improvements() {
        let c = ChannelState::new(vec![1.0, 0.5, 0.8], vec![0.0, 2.0, -2.0], 1.0).unwrap();
        let mut bf = Split {
            receiver: OneBitReceiver::new(),
            transmitter: OneBitTransmitter::new(PhaseVector::zeros(3), 0.3, ChaCha8Rng::seed_from_u64(5)),
        };
        let mut last = 0.0;
        for slot in 0..2000 {
            let trial = bf.transmit().clone();
            let rss = evaluate_rss(&c, &trial).unwrap();
            let rep = bf.step(&Measurement { rss, slot });
            if let Some(bit) = rep.feedback.first().and_then(FeedbackMessage::bit) {
                assert_eq!(bit, rss > last);
                if bit {
                    assert_eq!(bf.committed(), &trial);
                }
            }
            assert!(bf.recorded_best() >= last);
            last = bf.recorded_best();
        }
        assert!(last / rss_max(&c) > 0.99);
    }
}
