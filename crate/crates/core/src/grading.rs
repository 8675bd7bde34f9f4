//! Grading vectors: the positive rational grades attached to each coordinate.
//!
//! Grades are kept as exact rationals so that tensor gradings and map degrees
//! can be compared without rounding. Analytic formulas read the cached `f64`
//! view through [`GradingVector::as_f64`].

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact grade value.
pub type Rational = Ratio<i64>;

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    if t.is_empty() {
        return Err(Error::Parse("empty grade".into()));
    }
    match t.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator in {t:?}")))?;
            let d: i64 = d
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator in {t:?}")))?;
            if d == 0 {
                return Err(Error::Parse(format!("zero denominator in {t:?}")));
            }
            Ok(Ratio::new(n, d))
        }
        None => t
            .parse::<i64>()
            .map(Ratio::from_integer)
            .map_err(|_| Error::Parse(format!("bad grade {t:?}"))),
    }
}

/// Parses comma-separated rationals, zero and negative values included.
pub fn parse_rationals(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(parse_rational).collect()
}

fn write_list(f: &mut fmt::Formatter<'_>, grades: &[Rational]) -> fmt::Result {
    for (i, g) in grades.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{g}")?;
    }
    Ok(())
}

/// Ordered tuple of strictly positive rational grades `q = (q_0, ..., q_{n-1})`.
#[derive(Clone)]
pub struct GradingVector {
    grades: Vec<Rational>,
    reals: Vec<f64>,
}

impl GradingVector {
    pub fn new(grades: Vec<Rational>) -> Result<Self> {
        if grades.is_empty() {
            return Err(Error::Domain("grading must have at least one grade".into()));
        }
        if let Some((i, g)) = grades.iter().enumerate().find(|(_, g)| !g.is_positive()) {
            return Err(Error::Domain(format!("grade {i} is {g}, grades must be positive")));
        }
        let reals = grades.iter().map(rational_to_f64).collect();
        Ok(Self { grades, reals })
    }

    pub fn from_integers(grades: &[i64]) -> Result<Self> {
        Self::new(grades.iter().map(|&g| Ratio::from_integer(g)).collect())
    }

    /// The all-ones grading of length `n`, under which everything is classical.
    pub fn ones(n: usize) -> Self {
        Self::new(vec![Ratio::from_integer(1); n.max(1)]).expect("ones are positive")
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    pub fn grades(&self) -> &[Rational] {
        &self.grades
    }

    pub fn grade(&self, i: usize) -> Rational {
        self.grades[i]
    }

    pub fn as_f64(&self) -> &[f64] {
        &self.reals
    }

    pub fn is_classical(&self) -> bool {
        self.grades.iter().all(|g| *g == Ratio::from_integer(1))
    }

    pub fn is_integral(&self) -> bool {
        self.grades.iter().all(|g| g.is_integer())
    }

    /// Distinct grades in ascending order.
    pub fn distinct(&self) -> Vec<Rational> {
        let mut d = self.grades.clone();
        d.sort();
        d.dedup();
        d
    }

    pub fn max_grade(&self) -> Rational {
        *self.grades.iter().max().expect("non-empty")
    }

    /// Grading of the tensor product: entry `i * m + j` is `q_i + r_j`.
    pub fn tensor(&self, other: &GradingVector) -> GradingVector {
        let grades = self
            .grades
            .iter()
            .flat_map(|q| other.grades.iter().map(move |r| q + r))
            .collect();
        GradingVector::new(grades).expect("sums of positive grades are positive")
    }

    /// Grades of the dual basis, `-q_i`.
    pub fn dual(&self) -> SignedGrading {
        SignedGrading(self.grades.iter().map(|g| -g).collect())
    }
}

impl PartialEq for GradingVector {
    fn eq(&self, other: &Self) -> bool {
        self.grades == other.grades
    }
}

impl Eq for GradingVector {}

impl std::hash::Hash for GradingVector {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.grades.hash(state);
    }
}

impl fmt::Display for GradingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.grades)
    }
}

impl fmt::Debug for GradingVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GradingVector(")?;
        write_list(f, &self.grades)?;
        write!(f, ")")
    }
}

impl FromStr for GradingVector {
    type Err = Error;

    /// Parses comma-separated rationals such as `"2,4,6,10"` or `"1/2,1/3"`.
    fn from_str(s: &str) -> Result<Self> {
        GradingVector::new(parse_rationals(s)?)
    }
}

impl Serialize for GradingVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GradingVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Grades that may be zero or negative, as produced by dualizing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SignedGrading(pub Vec<Rational>);

impl SignedGrading {
    pub fn dual(&self) -> SignedGrading {
        SignedGrading(self.0.iter().map(|g| -g).collect())
    }

    /// Back to a [`GradingVector`] when every grade is positive.
    pub fn to_grading(&self) -> Result<GradingVector> {
        GradingVector::new(self.0.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

impl fmt::Display for SignedGrading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_list(f, &self.0)
    }
}
