//! The graded loss family.
//!
//! Every loss weights coordinate errors by their grade. With the all-ones
//! grading each one reduces to its classical counterpart.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::vector::{GradedVector, HomogeneousParts, NormScheme};

/// Lower bound applied to predicted probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// Selects a graded loss and its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LossKind {
    /// `(1/n) Σ q_i (y_i − ŷ_i)²`
    GradedMse,
    /// `Σ q_i (y_i − ŷ_i)²`
    GradedNorm,
    /// `Σ q_i ρ_δ(y_i − ŷ_i)`
    GradedHuber { delta: f64 },
    /// Squared homogeneous norm of `y − ŷ`.
    Homogeneous { scheme: NormScheme },
    /// `−Σ q_i y_i ln ŷ_i`
    GradedCrossEntropy,
    /// `(max_i q_i^{1/2} |y_i − ŷ_i|)²`
    MaxGraded,
}

impl LossKind {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("huber delta must be positive, got {delta}")));
        }
        Ok(LossKind::GradedHuber { delta })
    }

    pub fn evaluate(&self, y: &GradedVector, yhat: &GradedVector) -> Result<f64> {
        y.check_same_grading(yhat)?;
        let q = y.grading().as_f64();
        let pairs = y.values().iter().zip(yhat.values()).zip(q);
        Ok(match *self {
            LossKind::GradedMse => graded_norm_sum(y, yhat) / y.len() as f64,
            LossKind::GradedNorm => graded_norm_sum(y, yhat),
            LossKind::GradedHuber { delta } => pairs.map(|((a, b), q)| q * huber_rho(a - b, delta)).sum(),
            LossKind::Homogeneous { scheme } => {
                let parts = HomogeneousParts::new(&y.sub(yhat)?, scheme)?;
                parts.sum().powf(1.0 / parts.r)
            }
            LossKind::GradedCrossEntropy => {
                let mut total = 0.0;
                for ((a, b), q) in pairs {
                    if *a < 0.0 {
                        return Err(Error::Domain(format!("cross-entropy target {a} is negative")));
                    }
                    if *a != 0.0 {
                        total -= q * a * b.max(PROB_FLOOR).ln();
                    }
                }
                total
            }
            LossKind::MaxGraded => {
                let m = y.sub(yhat)?.max_graded_norm();
                m * m
            }
        })
    }

    pub const NAMES: [&'static str; 6] =
        ["graded_mse", "graded_norm", "huber:<delta>", "homogeneous:<scheme>", "cross_entropy", "max_graded"];
}

fn graded_norm_sum(y: &GradedVector, yhat: &GradedVector) -> f64 {
    y.values()
        .iter()
        .zip(yhat.values())
        .zip(y.grading().as_f64())
        .map(|((a, b), q)| q * (a - b) * (a - b))
        .sum()
}

/// Huber's `ρ_δ`; the quadratic branch includes `|z| = δ`.
pub fn huber_rho(z: f64, delta: f64) -> f64 {
    if z.abs() <= delta {
        0.5 * z * z
    } else {
        delta * z.abs() - 0.5 * delta * delta
    }
}

pub fn graded_mse(y: &GradedVector, yhat: &GradedVector) -> Result<f64> {
    LossKind::GradedMse.evaluate(y, yhat)
}

pub fn graded_norm_loss(y: &GradedVector, yhat: &GradedVector) -> Result<f64> {
    LossKind::GradedNorm.evaluate(y, yhat)
}

pub fn graded_huber(y: &GradedVector, yhat: &GradedVector, delta: f64) -> Result<f64> {
    LossKind::huber(delta)?.evaluate(y, yhat)
}

pub fn homogeneous_loss(y: &GradedVector, yhat: &GradedVector, scheme: NormScheme) -> Result<f64> {
    LossKind::Homogeneous { scheme }.evaluate(y, yhat)
}

pub fn graded_cross_entropy(y: &GradedVector, yhat: &GradedVector) -> Result<f64> {
    LossKind::GradedCrossEntropy.evaluate(y, yhat)
}

pub fn max_graded_loss(y: &GradedVector, yhat: &GradedVector) -> Result<f64> {
    LossKind::MaxGraded.evaluate(y, yhat)
}

impl FromStr for LossKind {
    type Err = Error;

    /// `graded_mse | graded_norm | huber:<delta> | homogeneous:<scheme> |
    /// cross_entropy | max_graded`
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("graded_mse", None) => Ok(LossKind::GradedMse),
            ("graded_norm", None) => Ok(LossKind::GradedNorm),
            ("huber", Some(d)) => {
                let delta = d.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad huber delta {d:?}")))?;
                LossKind::huber(delta)
            }
            ("homogeneous", Some(scheme)) => Ok(LossKind::Homogeneous { scheme: scheme.parse()? }),
            ("cross_entropy", None) => Ok(LossKind::GradedCrossEntropy),
            ("max_graded", None) => Ok(LossKind::MaxGraded),
            _ => Err(Error::Parse(format!("unknown loss {s:?}; expected one of {}", LossKind::NAMES.join(" | ")))),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::GradedMse => f.write_str("graded_mse"),
            LossKind::GradedNorm => f.write_str("graded_norm"),
            LossKind::GradedHuber { delta } => write!(f, "huber:{delta}"),
            LossKind::Homogeneous { scheme } => write!(f, "homogeneous:{scheme}"),
            LossKind::GradedCrossEntropy => f.write_str("cross_entropy"),
            LossKind::MaxGraded => f.write_str("max_graded"),
        }
    }
}
