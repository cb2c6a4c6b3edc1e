//! BioRARSA2: random search with swim/tumble moves and an adaptive step.
//!
//! A trial draws a perturbation `d` uniform on `[-step, step]` per node and
//! tests `theta + d`; if that fails it tests `theta - d`. An improving
//! direction is followed (swim) while it keeps improving, up to a length
//! cap. After each block of trials the step scales with the average swim
//! length. A long run of failed trials resets the step and re-baselines the
//! receiver's threshold, which lets the search recover from a drifted
//! channel.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::TopologyEvent;
use crate::error::{Error, Result};
use crate::model::{Measurement, PhaseVector};

use super::{FeedbackMessage, ReceiverSide, TransmitterSide};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiorarsaParams {
    /// Initial step size.
    pub delta_0: f64,
    /// Trials per step-size update.
    pub l_helds: u32,
    /// Longest swim.
    pub l_swim: u32,
    /// Consecutive failed trials tolerated before a reset.
    pub l_t: u32,
    /// Step size after a reset.
    pub delta_rst: f64,
    /// Floor on the step-size multiplier.
    pub rho: f64,
    /// Threshold shrink factor applied on reset.
    pub rho_t: f64,
}

impl Default for BiorarsaParams {
    fn default() -> Self {
        Self {
            delta_0: FRAC_PI_2,
            l_helds: 10,
            l_swim: 4,
            l_t: 15,
            delta_rst: FRAC_PI_2,
            rho: 0.5,
            rho_t: 0.95,
        }
    }
}

impl BiorarsaParams {
    pub fn validate(&self) -> Result<()> {
        let step_ok = |v: f64| v.is_finite() && v > 0.0 && v <= PI;
        if !step_ok(self.delta_0) {
            return Err(Error::config(".delta_0", "must lie in (0, pi]"));
        }
        if !step_ok(self.delta_rst) {
            return Err(Error::config(".delta_rst", "must lie in (0, pi]"));
        }
        if self.l_helds == 0 {
            return Err(Error::config(".l_helds", "must be >= 1"));
        }
        if self.l_swim < 1 {
            return Err(Error::config(".l_swim", "must be >= 1"));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::config(".rho", "must be > 0"));
        }
        if !(self.rho_t.is_finite() && self.rho_t > 0.0 && self.rho_t <= 1.0) {
            return Err(Error::config(".rho_t", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BiorarsaStage {
    Init,
    /// Testing `theta + d`.
    Trial,
    /// Testing `theta - d` after the forward test failed.
    Flip,
    /// Testing one more step along the accepted direction.
    Swim,
    /// Re-measuring `theta` after a run of failures.
    Reset,
}

/// Control flow shared by both halves; driven by the feedback bits only.
#[derive(Clone, Debug)]
struct Schedule {
    params: BiorarsaParams,
    stage: BiorarsaStage,
    /// Trials finished in the current block.
    trials: u32,
    /// Sum of swim lengths over the current block.
    swim_total: u32,
    /// Length of the swim in progress.
    omega: u32,
    /// Consecutive failed trials.
    n_t: u32,
    /// Which sign of `d` the last successful test used.
    sign: f64,
}

impl Schedule {
    fn new(params: BiorarsaParams) -> Self {
        Self {
            params,
            stage: BiorarsaStage::Init,
            trials: 0,
            swim_total: 0,
            omega: 0,
            n_t: 0,
            sign: 1.0,
        }
    }

    /// Returns the step-size multiplier when a block just ended, and whether
    /// a reset was triggered.
    fn finish_trial(&mut self, omega: u32) -> Option<(f64, bool)> {
        self.swim_total += omega;
        self.trials += 1;
        self.stage = BiorarsaStage::Trial;
        if self.trials < self.params.l_helds {
            return None;
        }
        let avg = f64::from(self.swim_total) / f64::from(self.params.l_helds);
        self.trials = 0;
        self.swim_total = 0;
        let reset = self.n_t > self.params.l_t;
        if reset {
            self.n_t = 0;
            self.stage = BiorarsaStage::Reset;
        }
        Some((avg.max(self.params.rho), reset))
    }

    fn accept(&mut self, sign: f64) {
        self.n_t = 0;
        self.sign = sign;
        // The accepted step counts toward the swim length.
        self.omega = 2;
    }

    /// Advances on the bit of the slot just measured. Returns the block-end
    /// update, if any.
    fn advance(&mut self, bit: Option<bool>) -> Option<(f64, bool)> {
        let improved = bit == Some(true);
        match self.stage {
            BiorarsaStage::Init | BiorarsaStage::Reset => {
                self.stage = BiorarsaStage::Trial;
                None
            }
            BiorarsaStage::Trial | BiorarsaStage::Flip => {
                if improved {
                    let sign = if self.stage == BiorarsaStage::Trial { 1.0 } else { -1.0 };
                    self.accept(sign);
                    self.continue_swim()
                } else if self.stage == BiorarsaStage::Trial {
                    self.stage = BiorarsaStage::Flip;
                    None
                } else {
                    self.n_t += 1;
                    self.finish_trial(0)
                }
            }
            BiorarsaStage::Swim => {
                if improved {
                    self.omega += 1;
                    self.continue_swim()
                } else {
                    self.finish_trial(self.omega)
                }
            }
        }
    }

    fn continue_swim(&mut self) -> Option<(f64, bool)> {
        if self.omega > self.params.l_swim {
            self.finish_trial(self.omega)
        } else {
            self.stage = BiorarsaStage::Swim;
            None
        }
    }

    /// Abandons the trial in progress after a membership change.
    fn restart(&mut self) {
        if self.stage != BiorarsaStage::Init {
            self.stage = BiorarsaStage::Trial;
        }
    }

    fn tag(&self) -> &'static str {
        match self.stage {
            BiorarsaStage::Init => "init",
            BiorarsaStage::Trial => "trial",
            BiorarsaStage::Flip => "flip",
            BiorarsaStage::Swim => "swim",
            BiorarsaStage::Reset => "reset",
        }
    }
}

pub struct BiorarsaReceiver {
    sched: Schedule,
    threshold: f64,
}

impl BiorarsaReceiver {
    pub fn new(params: BiorarsaParams) -> Self {
        Self {
            sched: Schedule::new(params),
            threshold: 0.0,
        }
    }

    /// Starts from a record carried over from an earlier search; the first
    /// measurement only raises it.
    pub fn with_threshold(params: BiorarsaParams, threshold: f64) -> Self {
        Self {
            sched: Schedule::new(params),
            threshold,
        }
    }

    pub fn stage_detail(&self) -> BiorarsaStage {
        self.sched.stage
    }
}

impl ReceiverSide for BiorarsaReceiver {
    fn stage(&self) -> &'static str {
        self.sched.tag()
    }

    fn observe(&mut self, m: &Measurement) -> Vec<FeedbackMessage> {
        let out = match self.sched.stage {
            BiorarsaStage::Init => {
                self.threshold = self.threshold.max(m.rss);
                Vec::new()
            }
            BiorarsaStage::Reset => {
                if m.rss < self.threshold {
                    self.threshold = self.sched.params.rho_t * m.rss;
                }
                Vec::new()
            }
            _ => {
                let improved = m.rss > self.threshold;
                if improved {
                    self.threshold = m.rss;
                }
                vec![FeedbackMessage::OneBit(improved)]
            }
        };
        self.sched.advance(out.first().and_then(FeedbackMessage::bit));
        out
    }

    fn recorded_best(&self) -> f64 {
        self.threshold
    }

    fn on_topology(&mut self, _events: &[TopologyEvent]) {
        self.sched.restart();
    }
}

pub struct BiorarsaTransmitter {
    sched: Schedule,
    rng: ChaCha8Rng,
    step: f64,
    direction: Vec<f64>,
    committed: PhaseVector,
    outgoing: PhaseVector,
}

impl BiorarsaTransmitter {
    pub fn new(initial: PhaseVector, params: BiorarsaParams, rng: ChaCha8Rng) -> Self {
        Self {
            sched: Schedule::new(params),
            rng,
            step: params.delta_0,
            direction: Vec::new(),
            outgoing: initial.clone(),
            committed: initial,
        }
    }

    /// Current step size.
    pub fn step_size(&self) -> f64 {
        self.step
    }

    fn draw(&mut self) {
        let s = self.step;
        self.direction.clear();
        for _ in 0..self.committed.len() {
            self.direction.push(self.rng.gen_range(-s..=s));
        }
    }

    fn shifted(&self, sign: f64) -> PhaseVector {
        let mut p = self.committed.clone();
        let d: Vec<f64> = self.direction.iter().map(|x| sign * x).collect();
        p.rotate_all(&d);
        p
    }

    fn refresh(&mut self) {
        self.outgoing = match self.sched.stage {
            BiorarsaStage::Init | BiorarsaStage::Reset => self.committed.clone(),
            BiorarsaStage::Trial => {
                self.draw();
                self.shifted(1.0)
            }
            BiorarsaStage::Flip => self.shifted(-1.0),
            BiorarsaStage::Swim => self.shifted(self.sched.sign),
        };
    }
}

impl TransmitterSide for BiorarsaTransmitter {
    fn transmit(&self) -> &PhaseVector {
        &self.outgoing
    }

    fn committed(&self) -> &PhaseVector {
        &self.committed
    }

    fn apply(&mut self, feedback: &[FeedbackMessage]) {
        if feedback.first().and_then(FeedbackMessage::bit) == Some(true) {
            self.committed.clone_from(&self.outgoing);
        }
        if let Some((factor, reset)) = self.sched.advance(feedback.first().and_then(FeedbackMessage::bit)) {
            self.step = if reset {
                self.sched.params.delta_rst
            } else {
                (self.step * factor).min(PI)
            };
        }
        self.refresh();
    }

    fn on_topology(&mut self, _events: &[TopologyEvent], committed: &PhaseVector) {
        self.committed.clone_from(committed);
        self.sched.restart();
        self.refresh();
    }
}
