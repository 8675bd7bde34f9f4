//! Additive and multiplicative graded neurons, with log-domain evaluation.

use std::sync::Arc;

use crate::error::{shape_err, Error, Result};
use crate::grading::{rational_to_f64, GradingVector, Rational};
use crate::vector::GradedVector;

/// `sgn(w) |w|^q`, the weight a base `w` contributes on a grade-`q` input.
#[inline]
pub fn effective_weight(w: f64, q: f64) -> f64 {
    if q == 1.0 {
        w
    } else {
        w.signum() * w.abs().powf(q)
    }
}

/// `d/dw [sgn(w) |w|^q] = q |w|^{q−1}`.
#[inline]
pub fn effective_weight_derivative(w: f64, q: f64) -> f64 {
    if q == 1.0 {
        1.0
    } else {
        q * w.abs().powf(q - 1.0)
    }
}

/// Sign and natural log of the magnitude of a real number.
///
/// Zero is `(0, −∞)`. Values too large for `f64` stay representable here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: v.signum(), ln_abs: v.abs().ln() }
        }
    }

    /// The real value, or `None` if it overflows `f64`.
    pub fn to_f64(self) -> Option<f64> {
        if self.sign == 0.0 {
            return Some(0.0);
        }
        let v = self.sign * self.ln_abs.exp();
        v.is_finite().then_some(v)
    }

    /// Signed sum of log-represented terms, shifted by the largest magnitude.
    pub fn sum(terms: &[LogValue]) -> LogValue {
        let shift = terms
            .iter()
            .filter(|t| t.sign != 0.0)
            .map(|t| t.ln_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        if shift == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let (mut pos, mut neg) = (0.0, 0.0);
        for t in terms {
            if t.sign > 0.0 {
                pos += (t.ln_abs - shift).exp();
            } else if t.sign < 0.0 {
                neg += (t.ln_abs - shift).exp();
            }
        }
        let diff = pos - neg;
        if diff == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: diff.signum(), ln_abs: shift + diff.abs().ln() }
        }
    }
}

/// `α(x) = Σ sgn(w_i)|w_i|^{q_i} x_i + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveNeuron {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub grading: Arc<GradingVector>,
}

impl AdditiveNeuron {
    pub fn new(weights: Vec<f64>, bias: f64, grading: Arc<GradingVector>) -> Result<Self> {
        if weights.len() != grading.len() {
            return Err(shape_err("neuron weights", grading.len(), weights.len()));
        }
        Ok(Self { weights, bias, grading })
    }

    fn check(&self, x: &GradedVector) -> Result<()> {
        if **x.grading() != *self.grading {
            return Err(Error::Shape(format!(
                "neuron expects grading {}, got {}",
                self.grading,
                x.grading()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &GradedVector) -> Result<f64> {
        self.check(x)?;
        let sum: f64 = self
            .weights
            .iter()
            .zip(self.grading.as_f64())
            .zip(x.values())
            .map(|((w, q), xi)| effective_weight(*w, *q) * xi)
            .sum();
        Ok(sum + self.bias)
    }

    /// Evaluates with each term as `q_i ln|w_i| + ln|x_i|`, deferring
    /// exponentiation until the signed terms are combined.
    pub fn forward_log(&self, x: &GradedVector) -> Result<LogValue> {
        self.check(x)?;
        let mut terms: Vec<LogValue> = self
            .weights
            .iter()
            .zip(self.grading.as_f64())
            .zip(x.values())
            .map(|((w, q), xi)| {
                if *w == 0.0 || *xi == 0.0 {
                    LogValue::ZERO
                } else {
                    LogValue { sign: w.signum() * xi.signum(), ln_abs: q * w.abs().ln() + xi.abs().ln() }
                }
            })
            .collect();
        terms.push(LogValue::from_f64(self.bias));
        Ok(LogValue::sum(&terms))
    }
}

/// `x^k` with the sign convention of the multiplicative neuron: integer `k`
/// keeps `sgn(x)^k`, non-integer `k` needs `x > 0`.
pub(crate) fn signed_pow(x: f64, k: Rational) -> Result<f64> {
    if k.is_integer() {
        let e = *k.numer();
        Ok(if e == 1 { x } else { x.powi(e as i32) })
    } else if x > 0.0 {
        Ok(x.powf(rational_to_f64(&k)))
    } else {
        Err(Error::Domain(format!("non-integer exponent {k} needs a positive input, got {x}")))
    }
}

/// `β(x) = Π_{k_i > 0} |w_i x_i|^{k_i} s_i + b`, with `s_i = sgn(x_i)^{k_i}`
/// for integer `k_i` and `s_i = 1` for positive `x_i`.
///
/// The neuron is graded-homogeneous of degree `Σ q_i k_i` when `b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeNeuron {
    pub weights: Vec<f64>,
    pub exponents: Vec<Rational>,
    pub bias: f64,
    pub grading: Arc<GradingVector>,
}

impl MultiplicativeNeuron {
    pub fn new(
        weights: Vec<f64>,
        exponents: Vec<Rational>,
        bias: f64,
        grading: Arc<GradingVector>,
    ) -> Result<Self> {
        if weights.len() != grading.len() {
            return Err(shape_err("neuron weights", grading.len(), weights.len()));
        }
        if exponents.len() != grading.len() {
            return Err(shape_err("neuron exponents", grading.len(), exponents.len()));
        }
        if let Some(k) = exponents.iter().find(|k| **k < Rational::from_integer(0)) {
            return Err(Error::Domain(format!("exponent {k} is negative")));
        }
        Ok(Self { weights, exponents, bias, grading })
    }

    /// Neuron representing `c · Π |x_i|^{k_i} sgn(x_i^{k_i})` exactly
    /// (for `c > 0`, or `c = 0`), with unit weights scaled by `c^{1/Σk}`.
    pub fn for_monomial(exponents: Vec<Rational>, coefficient: f64, grading: Arc<GradingVector>) -> Result<Self> {
        if coefficient < 0.0 {
            return Err(Error::Domain("monomial coefficient must be non-negative".into()));
        }
        let total: f64 = exponents.iter().map(rational_to_f64).sum();
        let weights = if total > 0.0 {
            let w = coefficient.powf(1.0 / total);
            exponents.iter().map(|_| w).collect()
        } else {
            vec![1.0; exponents.len()]
        };
        // With every exponent zero the product is empty and equals 1.
        let bias = if total > 0.0 { 0.0 } else { coefficient - 1.0 };
        Self::new(weights, exponents, bias, grading)
    }

    /// `Σ q_i k_i`.
    pub fn degree(&self) -> Rational {
        self.exponents.iter().zip(self.grading.grades()).map(|(k, q)| k * q).sum()
    }

    fn check(&self, x: &GradedVector) -> Result<()> {
        if **x.grading() != *self.grading {
            return Err(Error::Shape(format!(
                "neuron expects grading {}, got {}",
                self.grading,
                x.grading()
            )));
        }
        Ok(())
    }

    /// Per-coordinate factors `|w_i|^{k_i} signed_pow(x_i, k_i)`; 1 where `k_i = 0`.
    pub(crate) fn factors(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.weights
            .iter()
            .zip(&self.exponents)
            .zip(x)
            .map(|((w, k), xi)| {
                if *k == Rational::from_integer(0) {
                    Ok(1.0)
                } else {
                    Ok(w.abs().powf(rational_to_f64(k)) * signed_pow(*xi, *k)?)
                }
            })
            .collect()
    }

    pub(crate) fn forward_values(&self, x: &[f64]) -> Result<f64> {
        Ok(self.factors(x)?.iter().product::<f64>() + self.bias)
    }

    pub fn forward(&self, x: &GradedVector) -> Result<f64> {
        self.check(x)?;
        self.forward_values(x.values())
    }

    /// Accumulates `Σ k_i (ln|w_i| + ln|x_i|)` and the product sign before
    /// adding the bias in log space.
    pub fn forward_log(&self, x: &GradedVector) -> Result<LogValue> {
        self.check(x)?;
        let mut sign = 1.0;
        let mut ln_abs = 0.0;
        for ((w, k), xi) in self.weights.iter().zip(&self.exponents).zip(x.values()) {
            if *k == Rational::from_integer(0) {
                continue;
            }
            let s = signed_pow(xi.signum(), *k)?;
            if *w == 0.0 || s == 0.0 {
                sign = 0.0;
                ln_abs = f64::NEG_INFINITY;
                break;
            }
            sign *= s;
            ln_abs += rational_to_f64(k) * (w.abs().ln() + xi.abs().ln());
        }
        let product = if sign == 0.0 { LogValue::ZERO } else { LogValue { sign, ln_abs } };
        Ok(LogValue::sum(&[product, LogValue::from_f64(self.bias)]))
    }
}
