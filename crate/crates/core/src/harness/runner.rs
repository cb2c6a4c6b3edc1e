//! Monte Carlo trials.
//!
//! Each trial owns three random streams derived from `(master_seed, trial)`:
//!
//! ```text
//! seed   = splitmix64(master_seed ^ splitmix64(trial))
//! stream 0: channel draw, initial phases, churn, phase drift
//! stream 1: receiver noise
//! stream 2: the algorithm's own randomness
//! ```
//!
//! All three are ChaCha8 generators seeded with `seed` on different stream
//! numbers. Stream 0 never depends on the algorithm, so every algorithm sees
//! the same channel, topology history and drift for a given trial.
//!
//! Slots are numbered from 1. Within a slot: churn, then phase drift, then
//! one transmission and measurement, then the algorithm step, then the
//! record. The recorded `rss` is the noiseless RSS of the phases the
//! algorithm has committed to after the step, against the current channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algorithms::{build, AlgorithmSetup, Beamformer, FeedbackMessage};
use crate::channel::{apply_churn_in_place, evolve_phases_in_place, sample_channel, uniform_phase, TopologyEvent};
use crate::error::Result;
use crate::model::{evaluate_rss, evaluate_rss_noisy, gain_ratio, rss_max, ChannelState, Measurement, PhaseVector};

use super::config::ExperimentConfig;

/// The mixing function from the `splitmix64` generator.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master_seed`. Stable across releases.
pub fn trial_seed(master_seed: u64, trial: u32) -> u64 {
    splitmix64(master_seed ^ splitmix64(u64::from(trial)))
}

pub const STREAM_ENVIRONMENT: u64 = 0;
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_ALGORITHM: u64 = 2;

/// Generator for one of a trial's streams.
pub fn trial_stream(master_seed: u64, trial: u32, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial));
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub trial: u32,
    pub slot: u64,
    pub rss: f64,
    pub rss_max: f64,
    /// `rss / rss_max`, or 0 for an empty network.
    pub ratio: f64,
    pub n_active: usize,
    pub stage: &'static str,
}

/// Everything a trial starts from, before any slot runs.
pub struct PreparedTrial {
    pub channel: ChannelState,
    pub setup: AlgorithmSetup,
    pub environment: ChaCha8Rng,
    pub noise: ChaCha8Rng,
}

/// Draws the channel and initial phases of `trial`.
pub fn prepare_trial(cfg: &ExperimentConfig, trial: u32) -> PreparedTrial {
    let mut environment = trial_stream(cfg.master_seed, trial, STREAM_ENVIRONMENT);
    let channel = sample_channel(&cfg.scenario, &mut environment);
    let initial: Vec<f64> = (0..channel.len()).map(|_| uniform_phase(&mut environment)).collect();
    let setup = AlgorithmSetup {
        kind: cfg.algorithm,
        feedback: cfg.feedback.angle_feedback(),
        params: cfg.algorithm_params.clone(),
        tx_power: cfg.scenario.tx_power,
        initial: PhaseVector::new(initial).expect("uniform phases are canonical"),
        node_ids: channel.node_ids().to_vec(),
        rng: trial_stream(cfg.master_seed, trial, STREAM_ALGORITHM),
    };
    PreparedTrial {
        channel,
        setup,
        environment,
        noise: trial_stream(cfg.master_seed, trial, STREAM_NOISE),
    }
}

/// What happened in one slot, beyond the trace row.
#[derive(Clone, Debug, PartialEq)]
pub struct SlotOutcome {
    pub record: TraceRecord,
    pub events: Vec<TopologyEvent>,
    pub measured: f64,
    pub feedback: Vec<FeedbackMessage>,
}

/// Runs one trial slot by slot.
pub struct TrialRunner {
    cfg: ExperimentConfig,
    trial: u32,
    channel: ChannelState,
    beamformer: Box<dyn Beamformer>,
    environment: ChaCha8Rng,
    noise: ChaCha8Rng,
    noise_power: f64,
    slot: u64,
}

impl TrialRunner {
    pub fn new(cfg: &ExperimentConfig, trial: u32) -> Self {
        let p = prepare_trial(cfg, trial);
        Self {
            cfg: cfg.clone(),
            trial,
            channel: p.channel,
            beamformer: build(p.setup),
            environment: p.environment,
            noise: p.noise,
            noise_power: cfg.scenario.noise_power(),
            slot: 0,
        }
    }

    pub fn channel(&self) -> &ChannelState {
        &self.channel
    }

    pub fn beamformer(&self) -> &dyn Beamformer {
        self.beamformer.as_ref()
    }

    /// Slots run so far.
    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn advance(&mut self) -> Result<SlotOutcome> {
        self.slot += 1;
        let slot = self.slot;
        let spec = &self.cfg.scenario;
        let mut events = Vec::new();
        if spec.has_churn() {
            let mut phases = self.beamformer.committed().clone();
            events = apply_churn_in_place(&mut self.channel, &mut phases, spec, slot, &mut self.environment)?;
            if !events.is_empty() {
                self.beamformer.on_topology(&events, &phases);
            }
        }
        evolve_phases_in_place(&mut self.channel, spec.sigma_xi, &mut self.environment)?;
        let measured = evaluate_rss_noisy(&self.channel, self.beamformer.transmit(), self.noise_power, &mut self.noise)?;
        let report = self.beamformer.step(&Measurement { rss: measured, slot });
        let rss = evaluate_rss(&self.channel, self.beamformer.committed())?;
        let max = rss_max(&self.channel);
        let ratio = if max > 0.0 {
            gain_ratio(rss, &self.channel, true)?.value
        } else {
            0.0
        };
        Ok(SlotOutcome {
            record: TraceRecord {
                trial: self.trial,
                slot,
                rss,
                rss_max: max,
                ratio,
                n_active: self.channel.len(),
                stage: report.stage,
            },
            events,
            measured,
            feedback: report.feedback,
        })
    }

    pub fn step(&mut self) -> Result<TraceRecord> {
        self.advance().map(|o| o.record)
    }
}

/// Runs trial `trial` for the full slot budget.
pub fn run_trial(cfg: &ExperimentConfig, trial: u32) -> Result<Vec<TraceRecord>> {
    let mut runner = TrialRunner::new(cfg, trial);
    (0..cfg.slot_budget).map(|_| runner.step()).collect()
}

/// Runs every trial, in parallel, returning them in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<Vec<TraceRecord>>> {
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect()
}
