//! Graded vectors, the scalar action, and the grade-aware norms.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::grading::{rational_to_f64, GradingVector, Rational};

/// A real coordinate vector bound to a grading.
#[derive(Clone, PartialEq)]
pub struct GradedVector {
    values: Vec<f64>,
    grading: Arc<GradingVector>,
}

impl GradedVector {
    /// Builds a vector, rejecting length mismatches and non-finite entries.
    pub fn new(values: Vec<f64>, grading: Arc<GradingVector>) -> Result<Self> {
        if values.len() != grading.len() {
            return Err(shape_err("vector length vs grading", grading.len(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("coordinate {i} is not finite")));
        }
        Ok(Self { values, grading })
    }

    /// Builds a vector without the finiteness check (used for forward outputs,
    /// which may overflow and are inspected by the caller).
    pub(crate) fn from_parts(values: Vec<f64>, grading: Arc<GradingVector>) -> Self {
        debug_assert_eq!(values.len(), grading.len());
        Self { values, grading }
    }

    pub fn zeros(grading: Arc<GradingVector>) -> Self {
        Self { values: vec![0.0; grading.len()], grading }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn grading(&self) -> &Arc<GradingVector> {
        &self.grading
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Coordinate-wise difference `self - other`.
    pub fn sub(&self, other: &GradedVector) -> Result<GradedVector> {
        self.check_same_grading(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self::from_parts(values, self.grading.clone()))
    }

    pub(crate) fn check_same_grading(&self, other: &GradedVector) -> Result<()> {
        if self.grading != other.grading {
            return Err(Error::Shape(format!(
                "grading mismatch: {} vs {}",
                self.grading, other.grading
            )));
        }
        Ok(())
    }

    /// `lambda ⋆ x = (lambda^{q_i} x_i)`.
    pub fn scalar_action(&self, lambda: f64) -> Result<GradedVector> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("scalar action needs lambda > 0, got {lambda}")));
        }
        let values = self
            .values
            .iter()
            .zip(self.grading.as_f64())
            .map(|(x, q)| lambda.powf(*q) * x)
            .collect();
        Ok(Self::from_parts(values, self.grading.clone()))
    }

    /// `(Σ q_i |x_i|²)^{1/2}`.
    pub fn graded_euclidean_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grading.as_f64())
            .map(|(x, q)| q * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// `max_i q_i^{1/2} |x_i|`.
    pub fn max_graded_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grading.as_f64())
            .map(|(x, q)| q.sqrt() * x.abs())
            .fold(0.0, f64::max)
    }

    /// Grade-grouped norm `(Σ_j ‖x_{d_j}‖^{e_j})^{1/(2r)}`; see [`NormScheme`].
    pub fn homogeneous_norm(&self, scheme: NormScheme) -> Result<f64> {
        let parts = HomogeneousParts::new(self, scheme)?;
        Ok(parts.sum().powf(1.0 / (2.0 * parts.r)))
    }

    /// Splits `x` into its homogeneous components, one per distinct grade in
    /// ascending order. The components sum to `x` exactly.
    pub fn decompose(&self) -> Vec<(Rational, GradedVector)> {
        self.grading
            .distinct()
            .into_iter()
            .map(|d| (d, self.component(d)))
            .collect()
    }

    /// The homogeneous component of grade `d` (zero if `d` is absent).
    pub fn component(&self, d: Rational) -> GradedVector {
        let values = self
            .values
            .iter()
            .zip(self.grading.grades())
            .map(|(x, g)| if *g == d { *x } else { 0.0 })
            .collect();
        Self::from_parts(values, self.grading.clone())
    }
}

impl fmt::Debug for GradedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradedVector({:?} @ {})", self.values, self.grading)
    }
}

/// How the homogeneous norm assigns exponents to grade groups.
///
/// Both schemes group coordinates by distinct grade (ascending) and evaluate
/// `(Σ_j ‖x_{d_j}‖^{e_j})^{1/(2r)}`.
///
/// * `ByMaxGrade`: `r` is the largest grade and `e_j = 2r / d_j`. Needs integer
///   grades. The result is exactly 1-homogeneous under the dilation that
///   multiplies grade-`d` coordinates by `t^d`.
/// * `ByDistinctCount`: `r` is the number of distinct grades and
///   `e_j = 2r − 2(j − 1)`, the convention of the homogeneous loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScheme {
    ByMaxGrade,
    ByDistinctCount,
}

impl FromStr for NormScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "by_max_grade" | "max_grade" | "max" => Ok(NormScheme::ByMaxGrade),
            "by_distinct_count" | "distinct_count" | "distinct" => Ok(NormScheme::ByDistinctCount),
            other => Err(Error::Parse(format!("unknown norm scheme {other:?}"))),
        }
    }
}

impl fmt::Display for NormScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormScheme::ByMaxGrade => "by_max_grade",
            NormScheme::ByDistinctCount => "by_distinct_count",
        })
    }
}

/// Grade groups of a vector together with the exponents a scheme assigns.
pub(crate) struct HomogeneousParts {
    /// `(grade, exponent, Euclidean norm of the group)` in ascending grade order.
    pub groups: Vec<(Rational, f64, f64)>,
    pub r: f64,
}

impl HomogeneousParts {
    pub fn new(x: &GradedVector, scheme: NormScheme) -> Result<Self> {
        let distinct = x.grading.distinct();
        let (r, exponents): (f64, Vec<f64>) = match scheme {
            NormScheme::ByMaxGrade => {
                if !x.grading.is_integral() {
                    return Err(Error::Domain(format!(
                        "max-grade homogeneous norm needs integer grades, got {}",
                        x.grading
                    )));
                }
                let r = rational_to_f64(&x.grading.max_grade());
                let e = distinct.iter().map(|d| 2.0 * r / rational_to_f64(d)).collect();
                (r, e)
            }
            NormScheme::ByDistinctCount => {
                let r = distinct.len() as f64;
                let e = (0..distinct.len()).map(|j| 2.0 * r - 2.0 * j as f64).collect();
                (r, e)
            }
        };
        let groups = distinct
            .into_iter()
            .zip(exponents)
            .map(|(d, e)| {
                let norm = x
                    .values
                    .iter()
                    .zip(x.grading.grades())
                    .filter(|(_, g)| **g == d)
                    .map(|(v, _)| v * v)
                    .sum::<f64>()
                    .sqrt();
                (d, e, norm)
            })
            .collect();
        Ok(Self { groups, r })
    }

    pub fn sum(&self) -> f64 {
        self.groups.iter().map(|(_, e, n)| n.powf(*e)).sum()
    }
}
