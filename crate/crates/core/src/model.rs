//! Model parameters and the economic preconditions shared by every other
//! module.
//!
//! Rates are per unit time. The reward `R` is earned on joining and the
//! customer pays `C_l` per unit of time spent at node `l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arrival and service rates plus the reward/cost constants of the
/// join-or-balk decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    #[serde(rename = "R")]
    pub reward: f64,
    #[serde(rename = "c1")]
    pub cost1: f64,
    #[serde(rename = "c2")]
    pub cost2: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu1: f64, mu2: f64, reward: f64, cost1: f64, cost2: f64) -> Self {
        Self {
            lambda,
            mu1,
            mu2,
            reward,
            cost1,
            cost2,
        }
    }

    /// `R - C1/mu1 - C2/mu2`: the expected profit of joining an empty system.
    pub fn base_profit(&self) -> f64 {
        self.reward - self.cost1 / self.mu1 - self.cost2 / self.mu2
    }

    /// Validates and returns the parameters unchanged, or the first failing
    /// field as an error.
    pub fn checked(self, allow_degenerate: bool) -> Result<Self> {
        validate(&self, allow_degenerate).into_result()?;
        Ok(self)
    }

    /// Returns a copy with the named parameter replaced. Names follow the
    /// JSON keys: `lambda`, `mu1`, `mu2`, `R`, `c1`, `c2`.
    pub fn with(mut self, name: &str, value: f64) -> Result<Self> {
        match name {
            "lambda" => self.lambda = value,
            "mu1" => self.mu1 = value,
            "mu2" => self.mu2 = value,
            "R" => self.reward = value,
            "c1" => self.cost1 = value,
            "c2" => self.cost2 = value,
            other => {
                return Err(Error::Config(format!("unknown parameter '{other}'")));
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldCheck {
    pub field: &'static str,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub fields: Vec<FieldCheck>,
    /// Only present when every field passed.
    pub base_profit: Option<f64>,
    pub viable: Option<bool>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.fields.iter().all(|f| f.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FieldCheck> {
        self.fields.iter().filter(|f| !f.ok)
    }

    pub fn into_result(self) -> Result<()> {
        match self.fields.into_iter().find(|f| !f.ok) {
            None => Ok(()),
            Some(f) => Err(Error::InvalidParameter {
                field: f.field,
                reason: f
                    .message
                    .map(|m| m.trim_start_matches(f.field).trim_start().to_string())
                    .unwrap_or_default(),
            }),
        }
    }
}

fn check_rate(field: &'static str, value: f64) -> FieldCheck {
    let message = if !value.is_finite() {
        Some(format!("{field} must be finite"))
    } else if value <= 0.0 {
        Some(format!("{field} must be > 0"))
    } else {
        None
    };
    FieldCheck {
        field,
        ok: message.is_none(),
        message,
    }
}

fn check_economic(field: &'static str, value: f64) -> FieldCheck {
    let message = if !value.is_finite() {
        Some(format!("{field} must be finite"))
    } else if value < 0.0 {
        Some(format!("{field} must be >= 0"))
    } else {
        None
    };
    FieldCheck {
        field,
        ok: message.is_none(),
        message,
    }
}

/// Checks every field and, when all pass, reports the base profit and the
/// viability flag. Zero costs at both nodes are rejected unless
/// `allow_degenerate` is set.
pub fn validate(params: &ModelParams, allow_degenerate: bool) -> ValidationReport {
    let mut fields = vec![
        check_rate("lambda", params.lambda),
        check_rate("mu1", params.mu1),
        check_rate("mu2", params.mu2),
        check_economic("R", params.reward),
        check_economic("c1", params.cost1),
        check_economic("c2", params.cost2),
    ];
    if !allow_degenerate && params.cost1 == 0.0 && params.cost2 == 0.0 {
        fields.push(FieldCheck {
            field: "costs",
            ok: false,
            message: Some("costs c1 and c2 must not both be 0".into()),
        });
    }
    let ok = fields.iter().all(|f| f.ok);
    ValidationReport {
        fields,
        base_profit: ok.then(|| params.base_profit()),
        viable: ok.then(|| viability(params)),
    }
}

/// True iff joining an empty system has non-negative expected profit.
/// A profit of exactly zero counts as joining.
pub fn viability(params: &ModelParams) -> bool {
    params.base_profit() >= 0.0
}
