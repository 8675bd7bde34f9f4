//! Linear maps between graded spaces and their degree.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{shape_err, DegreeConflict, Error, Result};
use crate::grading::{GradingVector, Rational};
use crate::vector::GradedVector;

/// Dense `rows × cols` matrix from a `cols`-graded space to a `rows`-graded one.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedMatrix {
    entries: Vec<f64>,
    row_grading: Arc<GradingVector>,
    col_grading: Arc<GradingVector>,
}

impl GradedMatrix {
    /// `entries` is row-major with `row_grading.len()` rows.
    pub fn new(
        entries: Vec<f64>,
        row_grading: Arc<GradingVector>,
        col_grading: Arc<GradingVector>,
    ) -> Result<Self> {
        let expected = row_grading.len() * col_grading.len();
        if entries.len() != expected {
            return Err(shape_err("matrix entries", expected, entries.len()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("matrix entries must be finite".into()));
        }
        Ok(Self { entries, row_grading, col_grading })
    }

    pub fn rows(&self) -> usize {
        self.row_grading.len()
    }

    pub fn cols(&self) -> usize {
        self.col_grading.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols() + j]
    }

    pub fn row_grading(&self) -> &Arc<GradingVector> {
        &self.row_grading
    }

    pub fn col_grading(&self) -> &Arc<GradingVector> {
        &self.col_grading
    }

    pub fn apply(&self, x: &GradedVector) -> Result<GradedVector> {
        if **x.grading() != *self.col_grading {
            return Err(Error::Shape(format!(
                "matrix expects grading {}, got {}",
                self.col_grading,
                x.grading()
            )));
        }
        let n = self.cols();
        let values = (0..self.rows())
            .map(|i| (0..n).map(|j| self.get(i, j) * x.values()[j]).sum())
            .collect();
        Ok(GradedVector::from_parts(values, self.row_grading.clone()))
    }

    /// The degree `d` with `r_i = q_j + d` at every nonzero `a_ij`.
    ///
    /// The zero matrix is reported as degree 0. Entries implying different
    /// degrees produce [`Error::DegreeConflict`] with every nonzero entry
    /// grouped by the degree it implies.
    pub fn infer_degree(&self) -> Result<Rational> {
        let mut implied: BTreeMap<Rational, Vec<(usize, usize)>> = BTreeMap::new();
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                if self.get(i, j) != 0.0 {
                    let d = self.row_grading.grade(i) - self.col_grading.grade(j);
                    implied.entry(d).or_default().push((i, j));
                }
            }
        }
        match implied.len() {
            0 => Ok(Rational::from_integer(0)),
            1 => Ok(*implied.keys().next().expect("one key")),
            _ => Err(Error::DegreeConflict(DegreeConflict { groups: implied.into_iter().collect() })),
        }
    }
}
