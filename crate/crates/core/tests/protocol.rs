//! Whole-trial properties that cut across algorithms and scenarios.

use beamsim::algorithms::{build_halves, AlgorithmKind, SignMode};
use beamsim::channel::{evolve_phases_in_place, ScenarioKind, ScenarioSpec, TopologyKind};
use beamsim::harness::{prepare_trial, run_trial, ExperimentConfig, FeedbackSpec, TrialRunner};
use beamsim::model::{evaluate_rss, evaluate_rss_noisy, Measurement};

fn feedbacks(kind: AlgorithmKind) -> Vec<FeedbackSpec> {
    if kind.uses_angle_feedback() {
        vec![FeedbackSpec::exact(), FeedbackSpec::bits(3), FeedbackSpec::bits(1)]
    } else {
        vec![FeedbackSpec::exact()]
    }
}

fn scenarios(n: usize) -> Vec<ScenarioSpec> {
    vec![
        ScenarioSpec::static_rayleigh(n),
        ScenarioSpec {
            kind: ScenarioKind::Noisy,
            noise_power_db: Some(-10.0),
            ..ScenarioSpec::static_rayleigh(n)
        },
        ScenarioSpec {
            kind: ScenarioKind::TimeVarying,
            sigma_xi: 0.1,
            ..ScenarioSpec::static_rayleigh(n)
        },
    ]
}

/// The transmitters act on nothing but the feedback they are sent: replaying
/// a recorded feedback stream into a fresh transmitter reproduces every
/// phase it emitted, bit for bit.
#[test]
fn transmitters_depend_only_on_feedback() {
    for kind in AlgorithmKind::ALL {
        for fb in feedbacks(kind) {
            for mode in [SignMode::Predict, SignMode::Probe, SignMode::Optimistic] {
                for spec in scenarios(7) {
                    let mut cfg = ExperimentConfig::new(kind, spec);
                    cfg.feedback = fb;
                    cfg.algorithm_params.sign_mode = mode;
                    cfg.master_seed = 21;
                    let mut p = prepare_trial(&cfg, 0);
                    let (mut rx, mut tx) = build_halves(p.setup.clone());
                    let (_, mut replay) = build_halves(p.setup.clone());
                    let noise_power = cfg.scenario.noise_power();
                    for slot in 1..=400u64 {
                        evolve_phases_in_place(&mut p.channel, cfg.scenario.sigma_xi, &mut p.environment).unwrap();
                        let rss = evaluate_rss_noisy(&p.channel, tx.transmit(), noise_power, &mut p.noise).unwrap();
                        let fb = rx.observe(&Measurement { rss, slot });
                        tx.apply(&fb);
                        replay.apply(&fb);
                        assert_eq!(tx.transmit(), replay.transmit(), "{kind:?} {mode:?} slot {slot}");
                        assert_eq!(tx.committed(), replay.committed(), "{kind:?} {mode:?} slot {slot}");
                    }
                }
            }
        }
    }
}

#[test]
fn recorded_rss_never_exceeds_the_aligned_sum() {
    let churn = ScenarioSpec {
        kind: ScenarioKind::Churn,
        p_add: 0.05,
        p_remove: 0.05,
        ..ScenarioSpec::static_rayleigh(10)
    };
    for kind in AlgorithmKind::ALL {
        for spec in scenarios(10).into_iter().chain([churn.clone()]) {
            let mut cfg = ExperimentConfig::new(kind, spec);
            cfg.slot_budget = 600;
            cfg.master_seed = 4;
            for trial in 0..3 {
                for r in run_trial(&cfg, trial).unwrap() {
                    assert!(r.rss <= r.rss_max + 1e-9, "{kind:?} slot {}: {} > {}", r.slot, r.rss, r.rss_max);
                    assert!((0.0..=1.0 + 1e-9).contains(&r.ratio));
                }
            }
        }
    }
}

#[test]
fn hybrid_follows_dqesa_for_one_pass_then_switches_once() {
    let n = 12;
    for fb in [FeedbackSpec::exact(), FeedbackSpec::bits(2)] {
        let mut hybrid = ExperimentConfig::new(AlgorithmKind::Hybrid, ScenarioSpec::static_rayleigh(n));
        hybrid.feedback = fb;
        hybrid.algorithm_params.sign_mode = SignMode::Optimistic;
        hybrid.slot_budget = 200;
        let mut dqesa = hybrid.clone();
        dqesa.algorithm = AlgorithmKind::Dqesa;
        let h = run_trial(&hybrid, 2).unwrap();
        let d = run_trial(&dqesa, 2).unwrap();
        let pass = 3 * n;
        assert_eq!(h[..pass], d[..pass]);
        let switches: Vec<_> = h.iter().filter(|r| r.stage == "switch").map(|r| r.slot).collect();
        assert_eq!(switches, vec![pass as u64 + 1]);
    }
}

#[test]
fn churn_keeps_membership_consistent() {
    let spec = ScenarioSpec {
        kind: ScenarioKind::Churn,
        p_add: 0.1,
        p_remove: 0.1,
        ..ScenarioSpec::static_rayleigh(5)
    };
    for kind in AlgorithmKind::ALL {
        let mut cfg = ExperimentConfig::new(kind, spec.clone());
        cfg.master_seed = 8;
        let mut runner = TrialRunner::new(&cfg, 0);
        let mut n = runner.channel().len();
        let mut seen_ids = std::collections::HashSet::new();
        seen_ids.extend(runner.channel().node_ids().iter().copied());
        for _ in 0..500 {
            let o = runner.advance().unwrap();
            for ev in &o.events {
                match ev.kind {
                    TopologyKind::Added => {
                        n += 1;
                        // ids are never reused
                        assert!(seen_ids.insert(ev.node_id));
                    }
                    TopologyKind::Removed => n -= 1,
                }
                assert_eq!(ev.slot, o.record.slot);
            }
            assert_eq!(o.record.n_active, n);
            assert_eq!(runner.beamformer().committed().len(), n);
            assert_eq!(runner.beamformer().transmit().len(), n);
            let rss = evaluate_rss(runner.channel(), runner.beamformer().committed()).unwrap();
            assert_eq!(rss.to_bits(), o.record.rss.to_bits());
        }
    }
}

#[test]
fn emptied_network_reports_zero_ratio() {
    let spec = ScenarioSpec {
        kind: ScenarioKind::Churn,
        p_remove: 1.0,
        ..ScenarioSpec::static_rayleigh(3)
    };
    for kind in AlgorithmKind::ALL {
        let mut cfg = ExperimentConfig::new(kind, spec.clone());
        cfg.slot_budget = 10;
        let trace = run_trial(&cfg, 0).unwrap();
        let last = trace.last().unwrap();
        assert_eq!((last.n_active, last.rss, last.rss_max, last.ratio), (0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn trials_are_independent_of_execution_order() {
    let mut cfg = ExperimentConfig::new(AlgorithmKind::Biorarsa2, ScenarioSpec::static_rayleigh(6));
    cfg.n_trials = 6;
    cfg.slot_budget = 50;
    let all = beamsim::harness::run_trials(&cfg).unwrap();
    for t in (0..6).rev() {
        assert_eq!(all[t as usize], run_trial(&cfg, t).unwrap());
    }
}
