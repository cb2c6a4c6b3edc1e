//! Brute-force reference solvers.
//!
//! Nothing here shares formulas with the closed forms in
//! [`crate::algorithms::solve`]: the three-reading system is solved by grid
//! search on its residuals, and per-node optima by scanning the node's phase.
//! Both finish with a pattern search whose step halves a fixed number of
//! times around the incumbent.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::model::{evaluate_rss, ChannelState, NodeId, PhaseVector};

/// Halvings of the refinement step.
pub const REFINE_HALVINGS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Points per dimension.
    pub resolution: usize,
    /// Magnitudes are searched on `(0, mag_bound]`.
    pub mag_bound: f64,
}

impl GridSpec {
    /// A grid wide enough for any pair of magnitudes consistent with the
    /// readings: `|r|^2 + |t|^2 = (m1^2 + m2^2) / 2P`.
    pub fn for_readings(resolution: usize, m1: f64, m2: f64, tx_power: f64) -> Self {
        let x = (m1 * m1 + m2 * m2) / (2.0 * tx_power);
        Self {
            resolution,
            mag_bound: x.sqrt().max(f64::MIN_POSITIVE),
        }
    }

    fn check(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::contract(format!(
                "grid resolution must be >= 2, got {}",
                self.resolution
            )));
        }
        if !(self.mag_bound.is_finite() && self.mag_bound > 0.0) {
            return Err(Error::contract("grid magnitude bound must be > 0"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BruteSolution {
    pub beta: f64,
    pub r_mag: f64,
    pub t_mag: f64,
    /// Sum of squared residuals at the returned point.
    pub residual: f64,
}

/// Squared-reading residuals of a node of gain `t` at misalignment `beta`
/// against the rest of the network `r`, for rotations `0`, `pi`, `pi/2`.
fn residual(targets: [f64; 3], p: f64, beta: f64, r: f64, t: f64) -> f64 {
    let mut total = 0.0;
    for (target, delta) in targets.iter().zip([0.0, PI, FRAC_PI_2]) {
        // Law of cosines on the two phasors.
        let model = p * (r * r + t * t + 2.0 * r * t * (beta + delta).cos());
        total += (model - target) * (model - target);
    }
    total
}

/// Solves the three-reading system by exhaustive grid search over
/// `beta in [-pi/2, pi/2]`, `0 < |t| <= |r| <= bound`, then refines.
///
/// The ordering constraint picks one of the two mirror solutions (the
/// equations do not change when `|r|` and `|t|` swap).
pub fn brute_force_solve(m1: f64, m2: f64, m3: f64, tx_power: f64, grid: GridSpec) -> Result<BruteSolution> {
    grid.check()?;
    if !(tx_power > 0.0) {
        return Err(Error::contract("transmit power must be > 0"));
    }
    let targets = [m1 * m1, m2 * m2, m3 * m3];
    let n = grid.resolution;
    let bstep = PI / (n - 1) as f64;
    let mstep = grid.mag_bound / n as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    for ib in 0..n {
        let beta = -FRAC_PI_2 + ib as f64 * bstep;
        for ir in 1..=n {
            let r = ir as f64 * mstep;
            for it in 1..=ir {
                let t = it as f64 * mstep;
                let e = residual(targets, tx_power, beta, r, t);
                if e < best.0 {
                    best = (e, beta, r, t);
                }
            }
        }
    }
    let (mut err, mut beta, mut r, mut t) = best;
    let (mut sb, mut sm) = (bstep, mstep);
    for _ in 0..=REFINE_HALVINGS {
        // Move to the best neighbour until none improves, then halve.
        loop {
            let mut moved = false;
            for db in [-1.0, 0.0, 1.0] {
                for dr in [-1.0, 0.0, 1.0] {
                    for dt in [-1.0, 0.0, 1.0] {
                        let nb = (beta + db * sb).clamp(-FRAC_PI_2, FRAC_PI_2);
                        let nr = (r + dr * sm).clamp(0.0, grid.mag_bound);
                        let nt = (t + dt * sm).clamp(0.0, nr);
                        let e = residual(targets, tx_power, nb, nr, nt);
                        if e < err {
                            (err, beta, r, t) = (e, nb, nr, nt);
                            moved = true;
                        }
                    }
                }
            }
            if !moved {
                break;
            }
        }
        sb /= 2.0;
        sm /= 2.0;
    }
    Ok(BruteSolution {
        beta,
        r_mag: r,
        t_mag: t,
        residual: err,
    })
}

/// Best phase for one node with all others held fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinglePhaseOptimum {
    /// Commanded phase `psi` of the node at the optimum.
    pub theta_star: f64,
    pub rss_star: f64,
}

/// Scans node `node`'s commanded phase over `resolution` points of
/// `(-pi, pi]`, then refines around the best point.
pub fn best_single_phase(
    channel: &ChannelState,
    phases: &PhaseVector,
    node: NodeId,
    resolution: usize,
) -> Result<SinglePhaseOptimum> {
    let i = channel.index_of(node).ok_or(Error::UnknownNode(node))?;
    if resolution < 2 {
        return Err(Error::contract("grid resolution must be >= 2"));
    }
    let mut trial = phases.clone();
    let mut eval = |psi: f64| -> Result<f64> {
        trial.set(i, psi);
        evaluate_rss(channel, &trial)
    };
    let step = TAU / resolution as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 1..=resolution {
        let psi = -PI + k as f64 * step;
        let v = eval(psi)?;
        if v > best.0 {
            best = (v, psi);
        }
    }
    let (mut val, mut psi) = best;
    let mut s = step;
    for _ in 0..=REFINE_HALVINGS {
        loop {
            let mut moved = false;
            for cand in [psi - s, psi + s] {
                let v = eval(cand)?;
                if v > val {
                    (val, psi) = (v, cand);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        s /= 2.0;
    }
    Ok(SinglePhaseOptimum {
        theta_star: crate::model::wrap_phase(psi),
        rss_star: val,
    })
}

/// `sqrt(P) * sum a_i` by a plain loop, as an independent check on the model.
pub fn global_optimum(channel: &ChannelState) -> f64 {
    let mut total = 0.0;
    for a in channel.gains() {
        total += a;
    }
    channel.tx_power().sqrt() * total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rss_max;
    use std::f64::consts::FRAC_PI_4;

    fn readings(r: f64, t: f64, beta: f64) -> (f64, f64, f64) {
        let m = |d: f64| {
            let (re, im) = (r + t * (beta + d).cos(), t * (beta + d).sin());
            (re * re + im * im).sqrt()
        };
        (m(0.0), m(PI), m(FRAC_PI_2))
    }

    #[test]
    fn recovers_first_example_at_resolution_200() {
        let (m1, m2, m3) = readings(1.0, 0.5, FRAC_PI_4);
        let s = brute_force_solve(m1, m2, m3, 1.0, GridSpec::for_readings(200, m1, m2, 1.0)).unwrap();
        assert!((s.beta - FRAC_PI_4).abs() < 1e-4, "{s:?}");
        assert!((s.r_mag - 1.0).abs() < 1e-4, "{s:?}");
        assert!((s.t_mag - 0.5).abs() < 1e-4, "{s:?}");
    }

    #[test]
    fn aligned_beta_is_zero() {
        let (m1, m2, m3) = readings(2.0, 0.7, 0.0);
        let s = brute_force_solve(m1, m2, m3, 1.0, GridSpec::for_readings(60, m1, m2, 1.0)).unwrap();
        assert!(s.beta.abs() < 1e-4, "{s:?}");
    }

    #[test]
    fn single_phase_matches_alignment() {
        let c = ChannelState::new(vec![1.0, 0.6, 0.3], vec![0.4, -2.0, 1.1], 1.0).unwrap();
        let psi = PhaseVector::new(vec![0.0, 0.5, -0.5]).unwrap();
        let opt = best_single_phase(&c, &psi, 1, 64).unwrap();
        // r = others' phasor, |t| = a_1
        let (mut re, mut im) = (0.0, 0.0);
        for k in [0usize, 2] {
            re += c.gains()[k] * (c.phases()[k] + psi.get(k)).cos();
            im += c.gains()[k] * (c.phases()[k] + psi.get(k)).sin();
        }
        let expect = (re * re + im * im).sqrt() + 0.6;
        assert!((opt.rss_star - expect).abs() < 1e-8);
        assert!(opt.rss_star <= global_optimum(&c));
    }

    #[test]
    fn single_node_is_flat() {
        let c = ChannelState::new(vec![0.8], vec![1.0], 1.0).unwrap();
        let opt = best_single_phase(&c, &PhaseVector::zeros(1), 0, 16).unwrap();
        assert!((opt.rss_star - 0.8).abs() < 1e-12);
        assert!(best_single_phase(&c, &PhaseVector::zeros(1), 7, 16).is_err());
    }

    #[test]
    fn global_optimum_examples() {
        let c = ChannelState::new(vec![1.0, 2.0, 3.0], vec![0.0; 3], 1.0).unwrap();
        assert_eq!(global_optimum(&c), 6.0);
        assert_eq!(global_optimum(&c).to_bits(), rss_max(&c).to_bits());
        let empty = ChannelState::new(vec![], vec![], 1.0).unwrap();
        assert_eq!(global_optimum(&empty), 0.0);
        assert_eq!(rss_max(&empty).to_bits(), 0.0f64.to_bits());
    }
}
