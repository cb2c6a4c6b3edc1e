//! Receiver-side closed forms that turn two or three RSS readings into the
//! misalignment angle between one node's contribution `t` and the sum `r` of
//! everybody else's.
//!
//! With `beta = arg(t) - arg(r)`, a reading taken after rotating the node by
//! `delta` satisfies `M^2 = P(|r|^2 + |t|^2 + 2|r||t| cos(beta + delta))`.

/// Threshold below which the sine and cosine terms are treated as zero.
pub const DEGENERATE_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeSolution {
    /// Misalignment in `[-pi/2, pi/2]` when `m1 >= m2`.
    pub beta: f64,
    pub t_mag: f64,
    /// `|r||t|` was numerically zero; `beta` is meaningless and set to 0.
    pub degenerate: bool,
}

/// Solves the three-reading system.
///
/// `m1` is the reading at the kept phase, `m2` the reading with the node
/// rotated by `pi` from there, `m3` the reading rotated by `pi/2`.
///
/// The equations are symmetric in `|r|` and `|t|`; the returned magnitude is
/// the smaller of the two, which is `|t|` whenever the node's own
/// contribution does not dominate the rest of the network.
pub fn solve_three(m1: f64, m2: f64, m3: f64, tx_power: f64) -> ThreeSolution {
    let (s1, s2, s3) = (m1 * m1, m2 * m2, m3 * m3);
    let x = (s1 + s2) / 2.0;
    // x - m3^2 = 2P|r||t| sin(beta), x - m2^2 = 2P|r||t| cos(beta)
    let sin_term = x - s3;
    let cos_term = x - s2;
    if sin_term.abs() < DEGENERATE_EPS && cos_term.abs() < DEGENERATE_EPS {
        return ThreeSolution {
            beta: 0.0,
            t_mag: (x.max(0.0) / (2.0 * tx_power)).sqrt(),
            degenerate: true,
        };
    }
    let beta = sin_term.atan2(cos_term);
    // (m2^2 - x)^2 / cos^2(beta) written without the division; both equal
    // (2P|r||t|)^2 on noiseless input.
    let cross_sq = cos_term * cos_term + sin_term * sin_term;
    let inner = (x * x - cross_sq).max(0.0).sqrt();
    let t_mag = ((x - inner).max(0.0) / (2.0 * tx_power)).sqrt();
    ThreeSolution {
        beta,
        t_mag,
        degenerate: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoSolution {
    /// `|beta|` in `[0, pi]`; the sign is not observable from two readings.
    pub beta_mag: f64,
    pub degenerate: bool,
}

/// Recovers `|beta|` from the reading at the kept phase (`m1`), the reading
/// rotated by `pi` (`m2`) and a known `|t|`.
pub fn solve_two(m1: f64, m2: f64, t_mag: f64, tx_power: f64) -> TwoSolution {
    let degenerate = TwoSolution {
        beta_mag: 0.0,
        degenerate: true,
    };
    if !(t_mag > 0.0) {
        return degenerate;
    }
    let (s1, s2) = (m1 * m1, m2 * m2);
    let radicand = (2.0 * (s1 + s2) * tx_power - 4.0 * t_mag * t_mag * tx_power * tx_power).max(0.0);
    let denom = 2.0 * t_mag * radicand.sqrt();
    if denom < DEGENERATE_EPS {
        return degenerate;
    }
    TwoSolution {
        beta_mag: ((s1 - s2) / denom).clamp(-1.0, 1.0).acos(),
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    /// Direct complex-arithmetic oracle: readings for `r + t e^{j(beta+delta)}`
    /// with `r` on the real axis.
    fn reading(r: f64, t: f64, beta: f64, delta: f64, p: f64) -> f64 {
        (Complex64::new(r, 0.0) + Complex64::from_polar(t, beta + delta)).norm() * p.sqrt()
    }

    fn readings(r: f64, t: f64, beta: f64, p: f64) -> (f64, f64, f64) {
        (
            reading(r, t, beta, 0.0, p),
            reading(r, t, beta, std::f64::consts::PI, p),
            reading(r, t, beta, FRAC_PI_2, p),
        )
    }

    #[test]
    fn oracle_values_for_first_example() {
        let (m1, m2, m3) = readings(1.0, 0.5, FRAC_PI_4, 1.0);
        assert!((m1 * m1 - 1.957_106_781).abs() < 1e-8);
        assert!((m2 * m2 - 0.542_893_219).abs() < 1e-8);
        assert!((m3 * m3 - 0.542_893_219).abs() < 1e-8);
        let s = solve_three(m1, m2, m3, 1.0);
        assert!((s.beta - FRAC_PI_4).abs() < 1e-12);
        assert!((s.t_mag - 0.5).abs() < 1e-12);
        assert!(!s.degenerate);
    }

    #[test]
    fn oracle_values_for_negative_beta() {
        let (m1, m2, m3) = readings(2.0, 1.0, -FRAC_PI_3, 1.0);
        let x = (m1 * m1 + m2 * m2) / 2.0;
        assert!((m3 * m3 - x - 3.464_101_615).abs() < 1e-8);
        assert!((m2 * m2 - x + 2.0).abs() < 1e-8);
        let s = solve_three(m1, m2, m3, 1.0);
        assert!((s.beta + FRAC_PI_3).abs() < 1e-12);
        assert!((s.t_mag - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aligned_gives_zero() {
        let (m1, m2, m3) = readings(1.5, 0.7, 0.0, 1.0);
        assert!(solve_three(m1, m2, m3, 1.0).beta.abs() < 1e-12);
        assert!(solve_two(m1, m2, 0.7, 1.0).beta_mag.abs() < 1e-6);
    }

    #[test]
    fn degenerate_when_no_cross_term() {
        // Single node: rotating it never changes the magnitude.
        let s = solve_three(1.0, 1.0, 1.0, 1.0);
        assert!(s.degenerate);
        assert_eq!(s.beta, 0.0);
        assert!((s.t_mag - (0.5f64).sqrt()).abs() < 1e-15);
        assert!(solve_two(1.0, 1.0, 0.0, 1.0).degenerate);
    }

    #[test]
    fn two_reading_examples() {
        let (m1, m2, _) = readings(1.0, 0.5, FRAC_PI_4, 1.0);
        assert!((m1 * m1 - m2 * m2 - std::f64::consts::SQRT_2).abs() < 1e-8);
        let s = solve_two(m1, m2, 0.5, 1.0);
        assert!((s.beta_mag - FRAC_PI_4).abs() < 1e-12);
        let (m1, m2, _) = readings(1.0, 0.5, -FRAC_PI_4, 1.0);
        assert!((solve_two(m1, m2, 0.5, 1.0).beta_mag - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn swapped_roles_return_smaller_magnitude() {
        let (m1, m2, m3) = readings(0.4, 1.3, 0.3, 1.0);
        let s = solve_three(m1, m2, m3, 1.0);
        assert!((s.t_mag - 0.4).abs() < 1e-10);
        assert!((s.beta - 0.3).abs() < 1e-10);
        // The two-reading form is symmetric, so either magnitude works.
        assert!((solve_two(m1, m2, 0.4, 1.0).beta_mag - 0.3).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn three_reading_recovery(
            r in 1e-3f64..10.0,
            frac in 1e-3f64..1.0,
            beta in (-FRAC_PI_2 + 1e-6)..(FRAC_PI_2 - 1e-6),
            p in 0.25f64..4.0,
        ) {
            let t = r * frac;
            let (m1, m2, m3) = readings(r, t, beta, p);
            let s = solve_three(m1, m2, m3, p);
            prop_assert!((s.beta - beta).abs() < 1e-6, "beta {} vs {}", s.beta, beta);
            prop_assert!((s.t_mag - t).abs() < 1e-6, "t {} vs {}", s.t_mag, t);
        }

        #[test]
        fn two_reading_recovery(
            r in 1e-3f64..10.0,
            t in 1e-3f64..10.0,
            beta in (-FRAC_PI_2 + 1e-3)..(FRAC_PI_2 - 1e-3),
        ) {
            let (m1, m2, _) = readings(r, t, beta, 1.0);
            let s = solve_two(m1, m2, t, 1.0);
            prop_assert!((s.beta_mag - beta.abs()).abs() < 1e-6);
        }
    }
}
