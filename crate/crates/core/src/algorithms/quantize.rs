//! Uniform midpoint quantizer for corrective angles on `[-pi/2, pi/2]`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

use super::FeedbackMessage;

/// Bandwidth of the angle feedback link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleFeedback {
    Exact,
    Bits(u8),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quantized {
    /// Cell midpoint, or `None` inside the dead zone.
    pub value: Option<f64>,
    /// The input lay outside `[-pi/2, pi/2]` and was clamped first.
    pub clamped: bool,
}

pub const MAX_BITS: u8 = 16;

/// Maps `beta` onto the midpoint of one of `2^bits` equal cells spanning
/// `[-pi/2, pi/2]`. Angles smaller in magnitude than
/// `dead_zone_factor * (pi/2) / 2^(bits+1)` produce no value.
pub fn quantize_beta(beta: f64, bits: u8, dead_zone_factor: f64) -> Result<Quantized> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::contract(format!(
            "quantizer needs 1..={MAX_BITS} bits, got {bits}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::contract(format!("beta must be finite, got {beta}")));
    }
    let clamped = beta.abs() > FRAC_PI_2;
    let b = beta.clamp(-FRAC_PI_2, FRAC_PI_2);
    let cells = 1u32 << bits;
    let step = PI / f64::from(cells);
    if b.abs() < dead_zone_factor * FRAC_PI_2 / f64::from(cells * 2) {
        return Ok(Quantized {
            value: None,
            clamped,
        });
    }
    let idx = (((b + FRAC_PI_2) / step).floor() as u32).min(cells - 1);
    Ok(Quantized {
        value: Some(-FRAC_PI_2 + (f64::from(idx) + 0.5) * step),
        clamped,
    })
}

impl AngleFeedback {
    /// Encodes a receiver-side angle into the message the link can carry.
    pub fn encode(&self, beta: f64, dead_zone_factor: f64) -> FeedbackMessage {
        match *self {
            AngleFeedback::Exact => {
                if beta == 0.0 || !beta.is_finite() {
                    FeedbackMessage::None
                } else {
                    FeedbackMessage::ExactAngle(beta.clamp(-FRAC_PI_2, FRAC_PI_2))
                }
            }
            AngleFeedback::Bits(bits) => {
                let q = quantize_beta(if beta.is_finite() { beta } else { 0.0 }, bits, dead_zone_factor)
                    .expect("bit width validated at construction");
                match q.value {
                    Some(value) => FeedbackMessage::QuantizedAngle { value, bits },
                    None => FeedbackMessage::None,
                }
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, AngleFeedback::Exact)
    }
}
