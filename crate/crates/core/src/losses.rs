//! Margin-based binary losses.
//!
//! All losses are functions of the margin `m = y * z` for a real score `z`
//! and a label in {-1,+1}:
//!
//! * sigmoid:      `1 / (1 + exp(m))`
//! * logistic:     `ln(1 + exp(-m))`, computed overflow-safe
//! * double hinge: `max(-m, max(0, (1 - m) / 2))`
//! * zero-one:     `[m <= 0]`, evaluation only, never trained on

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Sigmoid,
    Logistic,
    DoubleHinge,
    ZeroOne,
}

impl LossKind {
    pub const TRAINABLE: [LossKind; 3] =
        [LossKind::Sigmoid, LossKind::Logistic, LossKind::DoubleHinge];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Sigmoid => "sigmoid",
            LossKind::Logistic => "logistic",
            LossKind::DoubleHinge => "double_hinge",
            LossKind::ZeroOne => "zero_one",
        }
    }

    /// Lipschitz constant of the loss in the score argument.
    ///
    /// The double hinge has slope -1 on margins below -1, so its constant
    /// is 1 (the 1/2 slope only holds on the central segment).
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            LossKind::Sigmoid => Some(0.25),
            LossKind::Logistic => Some(1.0),
            LossKind::DoubleHinge => Some(1.0),
            LossKind::ZeroOne => None,
        }
    }

    /// Largest loss value reachable when scores are bounded by `c_g`;
    /// losses decrease in the margin, so the maximum sits at margin `-c_g`.
    pub fn max_loss_at(&self, c_g: f64) -> f64 {
        match self {
            LossKind::ZeroOne => 1.0,
            _ => margin_loss(*self, -c_g),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_label(label: i8) -> Result<f64> {
    match label {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        _ => Err(Error::invalid(format!("label must be -1 or +1, got {label}"))),
    }
}

fn margin_loss(kind: LossKind, m: f64) -> f64 {
    match kind {
        LossKind::Sigmoid => 1.0 / (1.0 + m.exp()),
        // ln(1 + e^-m) = max(-m, 0) + ln(1 + e^-|m|)
        LossKind::Logistic => (-m).max(0.0) + (-m.abs()).exp().ln_1p(),
        LossKind::DoubleHinge => (-m).max(0f64.max(0.5 * (1.0 - m))),
        LossKind::ZeroOne => {
            if m <= 0.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Loss value at a score/label pair.
pub fn loss(kind: LossKind, score: f64, label: i8) -> Result<f64> {
    let y = check_label(label)?;
    if !score.is_finite() {
        return Err(Error::NonFiniteScore { value: score });
    }
    Ok(margin_loss(kind, y * score))
}

/// Derivative of the loss with respect to the score. At the double-hinge
/// kinks the subgradient from the right (in the margin) is used.
pub fn loss_grad(kind: LossKind, score: f64, label: i8) -> Result<f64> {
    let y = check_label(label)?;
    if !score.is_finite() {
        return Err(Error::NonFiniteScore { value: score });
    }
    let m = y * score;
    let dm = match kind {
        LossKind::ZeroOne => {
            return Err(Error::NonDifferentiableKind { kind: "zero_one" });
        }
        // d/dm 1/(1+e^m) = -l (1 - l), stable on both tails
        LossKind::Sigmoid => {
            let l = 1.0 / (1.0 + m.exp());
            -l * (1.0 - l)
        }
        // d/dm ln(1 + e^-m) = -1/(1 + e^m)
        LossKind::Logistic => -1.0 / (1.0 + m.exp()),
        LossKind::DoubleHinge => {
            if m < -1.0 {
                -1.0
            } else if m < 1.0 {
                -0.5
            } else {
                0.0
            }
        }
    };
    Ok(y * dm)
}
