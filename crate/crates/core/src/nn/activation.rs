use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::GradedVector;

/// Inputs with magnitude at or below this are treated as zero by the graded
/// ReLU family, in value and in derivative.
pub const CLAMP: f64 = 1e-10;

/// `|x|^{1/q}` for `x >= 0`, using the exact root where one exists.
pub(crate) fn root(x: f64, q: f64) -> f64 {
    if q == 1.0 {
        x
    } else if q == 2.0 {
        x.sqrt()
    } else if q == 3.0 {
        x.cbrt()
    } else {
        x.powf(1.0 / q)
    }
}

/// Coordinate nonlinearity applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    /// `max{0, |x|^{1/q}}`; positive on negative inputs.
    GradedRelu,
    /// `max{0, |x|^{1/q} sgn(x)}`.
    SignedGradedRelu,
    /// `exp(x/q) − 1`.
    GradedExp,
    /// `max{0, x}`, grade-blind.
    ClassicalRelu,
    Identity,
}

impl ActivationKind {
    pub fn apply(self, x: f64, q: f64) -> f64 {
        match self {
            ActivationKind::GradedRelu => {
                if x.abs() <= CLAMP {
                    0.0
                } else {
                    root(x.abs(), q)
                }
            }
            ActivationKind::SignedGradedRelu => {
                if x <= CLAMP {
                    0.0
                } else {
                    root(x, q)
                }
            }
            ActivationKind::GradedExp => (x / q).exp_m1(),
            ActivationKind::ClassicalRelu => x.max(0.0),
            ActivationKind::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation. Inside the clamp band
    /// the graded ReLUs report 0; classical ReLU reports 0 at the kink.
    pub fn derivative(self, x: f64, q: f64) -> f64 {
        match self {
            ActivationKind::GradedRelu => {
                if x.abs() <= CLAMP {
                    0.0
                } else {
                    x.signum() * x.abs().powf(1.0 / q - 1.0) / q
                }
            }
            ActivationKind::SignedGradedRelu => {
                if x <= CLAMP {
                    0.0
                } else {
                    x.powf(1.0 / q - 1.0) / q
                }
            }
            ActivationKind::GradedExp => (x / q).exp() / q,
            ActivationKind::ClassicalRelu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::Identity => 1.0,
        }
    }

    pub const ALL: [ActivationKind; 5] = [
        ActivationKind::GradedRelu,
        ActivationKind::SignedGradedRelu,
        ActivationKind::GradedExp,
        ActivationKind::ClassicalRelu,
        ActivationKind::Identity,
    ];

    fn name(self) -> &'static str {
        match self {
            ActivationKind::GradedRelu => "graded_relu",
            ActivationKind::SignedGradedRelu => "signed_graded_relu",
            ActivationKind::GradedExp => "graded_exp",
            ActivationKind::ClassicalRelu => "classical_relu",
            ActivationKind::Identity => "identity",
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActivationKind::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown activation {s:?}")))
    }
}

fn map_coords(x: &GradedVector, kind: ActivationKind) -> GradedVector {
    let values = x
        .values()
        .iter()
        .zip(x.grading().as_f64())
        .map(|(v, q)| kind.apply(*v, *q))
        .collect();
    GradedVector::from_parts(values, x.grading().clone())
}

/// Graded ReLU on every coordinate; `signed` selects `max{0, |x|^{1/q} sgn(x)}`.
pub fn graded_relu(x: &GradedVector, signed: bool) -> GradedVector {
    let kind = if signed { ActivationKind::SignedGradedRelu } else { ActivationKind::GradedRelu };
    map_coords(x, kind)
}

/// `exp(x_i / q_i) − 1` on every coordinate.
pub fn graded_exp(x: &GradedVector) -> GradedVector {
    map_coords(x, ActivationKind::GradedExp)
}
