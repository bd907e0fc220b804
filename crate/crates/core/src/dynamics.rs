//! Node state and the opinion update rules.
//!
//! Pole convention: Red is `0.0`, Blue is `1.0`. Peer gates use a strict
//! `<` comparison against the confidence bound; broadcast gates use `<=`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("potency {potency} outside [1, {p_max}]")]
    PotencyOutOfRange { potency: u32, p_max: u32 },
    #[error("non-finite opinion value {0}")]
    NonFinite(f64),
    #[error("invalid dynamics parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Red,
    Blue,
}

impl Side {
    pub fn pole(self) -> f64 {
        match self {
            Side::Red => 0.0,
            Side::Blue => 1.0,
        }
    }

    pub fn opponent(self) -> Side {
        match self {
            Side::Red => Side::Blue,
            Side::Blue => Side::Red,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Red => "red",
            Side::Blue => "blue",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "red" => Ok(Side::Red),
            "blue" => Ok(Side::Blue),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenNodeState {
    pub opinion: f64,
    pub susceptibility: f64,
    pub confidence_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsParams {
    /// Convergence step, in `(0, 0.5]`.
    pub mu: f64,
    pub p_max: u32,
    pub backfire_threshold: u32,
    pub backfire_strength: f64,
    pub backfire_applies_to_blue: bool,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        DynamicsParams {
            mu: 0.3,
            p_max: 10,
            backfire_threshold: 8,
            backfire_strength: 0.1,
            backfire_applies_to_blue: false,
        }
    }
}

impl DynamicsParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |field, reason: &str| Err(DynamicsError::InvalidParam { field, reason: reason.to_string() });
        if !(self.mu > 0.0 && self.mu <= 0.5) {
            return bad("mu", "must be in (0, 0.5]");
        }
        if self.p_max < 1 {
            return bad("p_max", "must be at least 1");
        }
        if self.backfire_threshold < 1 || self.backfire_threshold > self.p_max {
            return bad("backfire_threshold", "must be in [1, p_max]");
        }
        if !(0.0..=0.5).contains(&self.backfire_strength) {
            return bad("backfire_strength", "must be in [0, 0.5]");
        }
        Ok(())
    }
}

/// How a node responded to a broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Effect {
    Accepted,
    Rejected,
    Backfired,
}

/// Clamps a finite value into `[0, 1]`.
pub fn clamp01(x: f64) -> Result<f64, DynamicsError> {
    if !x.is_finite() {
        return Err(DynamicsError::NonFinite(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

// Update-path clamp. Inputs are finite by construction.
#[inline]
fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Classic symmetric Deffuant step. Susceptibility is not applied.
pub fn peer_update_symmetric(xi: f64, xj: f64, eps: f64, mu: f64) -> (f64, f64) {
    if (xi - xj).abs() < eps {
        let step = mu * (xj - xi);
        (xi + step, xj - step)
    } else {
        (xi, xj)
    }
}

/// Receiver-only step along a directed edge.
pub fn peer_update_directed(receiver: &GreenNodeState, sender_opinion: f64, mu: f64) -> f64 {
    let x = receiver.opinion;
    if (sender_opinion - x).abs() < receiver.confidence_bound {
        clamp_unit(x + mu * receiver.susceptibility * (sender_opinion - x))
    } else {
        x
    }
}

/// Applies one broadcast of integer potency `p` to a node.
///
/// Inside the gate (`|x - pole| <= eps`) the node moves toward the pole by
/// `mu * s * p/p_max`. Outside it, a message at or above the backfire
/// threshold pushes the node away by `mu_b * s * p/p_max` (Red always, Blue
/// only when enabled); anything else is ignored.
pub fn broadcast_update(
    node: &GreenNodeState,
    side: Side,
    potency: u32,
    params: &DynamicsParams,
) -> Result<(f64, Effect), DynamicsError> {
    if potency < 1 || potency > params.p_max {
        return Err(DynamicsError::PotencyOutOfRange { potency, p_max: params.p_max });
    }
    let x = node.opinion;
    let t = side.pole();
    let scale = f64::from(potency) / f64::from(params.p_max);
    if (x - t).abs() <= node.confidence_bound {
        return Ok((clamp_unit(x + params.mu * node.susceptibility * scale * (t - x)), Effect::Accepted));
    }
    let backfire_side = side == Side::Red || params.backfire_applies_to_blue;
    if potency >= params.backfire_threshold && backfire_side {
        let x2 = clamp_unit(x - params.backfire_strength * node.susceptibility * scale * (t - x));
        return Ok((x2, Effect::Backfired));
    }
    Ok((x, Effect::Rejected))
}
