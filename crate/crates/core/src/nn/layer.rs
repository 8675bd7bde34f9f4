use std::ops::Range;
use std::sync::Arc;

use super::activation::ActivationKind;
use super::neuron::effective_weight;
use crate::error::{shape_err, Error, Result};
use crate::grading::{GradingVector, Rational};
use crate::vector::GradedVector;

/// A rectangle of a layer's weight matrix pairing output and input
/// coordinates of one grade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradeBlock {
    pub grade: Rational,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// `y = g(W x + b)` with `W_{j,i} = sgn(w_{j,i}) |w_{j,i}|^{q_i}`.
///
/// `weight_base` holds the `w_{j,i}` row-major, `rows = out_grading.len()`,
/// `cols = in_grading.len()`. Activations use the output coordinate's grade.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub(crate) weight_base: Vec<f64>,
    pub(crate) bias: Vec<f64>,
    pub(crate) activation: ActivationKind,
    pub(crate) in_grading: Arc<GradingVector>,
    pub(crate) out_grading: Arc<GradingVector>,
    pub(crate) blocks: Option<Vec<GradeBlock>>,
}

impl Layer {
    pub fn new(
        weight_base: Vec<f64>,
        bias: Vec<f64>,
        activation: ActivationKind,
        in_grading: Arc<GradingVector>,
        out_grading: Arc<GradingVector>,
    ) -> Result<Self> {
        let (rows, cols) = (out_grading.len(), in_grading.len());
        if weight_base.len() != rows * cols {
            return Err(shape_err("layer weights", rows * cols, weight_base.len()));
        }
        if bias.len() != rows {
            return Err(shape_err("layer bias", rows, bias.len()));
        }
        Ok(Self { weight_base, bias, activation, in_grading, out_grading, blocks: None })
    }

    /// Attaches a grade-block structure after checking that every block pairs
    /// equal grades, blocks do not overlap, and every nonzero weight lies in a
    /// block.
    pub fn with_blocks(mut self, blocks: Vec<GradeBlock>) -> Result<Self> {
        let (rows, cols) = (self.rows(), self.cols());
        let mut covered = vec![false; rows * cols];
        for (b, block) in blocks.iter().enumerate() {
            if block.rows.end > rows || block.cols.end > cols || block.rows.is_empty() || block.cols.is_empty() {
                return Err(Error::Shape(format!("block {b} is empty or out of bounds")));
            }
            if block.rows.clone().any(|j| self.out_grading.grade(j) != block.grade)
                || block.cols.clone().any(|i| self.in_grading.grade(i) != block.grade)
            {
                return Err(Error::Shape(format!("block {b} mixes grades other than {}", block.grade)));
            }
            for j in block.rows.clone() {
                for i in block.cols.clone() {
                    if std::mem::replace(&mut covered[j * cols + i], true) {
                        return Err(Error::Shape(format!("block {b} overlaps another block")));
                    }
                }
            }
        }
        if let Some(k) = (0..rows * cols).find(|&k| !covered[k] && self.weight_base[k] != 0.0) {
            return Err(Error::Shape(format!(
                "nonzero weight at ({}, {}) lies outside every block",
                k / cols,
                k % cols
            )));
        }
        let mut blocks = blocks;
        blocks.sort_by_key(|b| (b.cols.start, b.rows.start));
        self.blocks = Some(blocks);
        Ok(self)
    }

    /// Blocks for every grade shared by contiguous runs of input and output
    /// coordinates. Only valid when equal grades are contiguous on both sides.
    pub fn grade_blocks_for(in_grading: &GradingVector, out_grading: &GradingVector) -> Vec<GradeBlock> {
        let runs = |g: &GradingVector| {
            let mut out: Vec<(Rational, Range<usize>)> = Vec::new();
            for (i, q) in g.grades().iter().enumerate() {
                match out.last_mut() {
                    Some((grade, range)) if grade == q => range.end = i + 1,
                    _ => out.push((*q, i..i + 1)),
                }
            }
            out
        };
        let ins = runs(in_grading);
        let mut blocks = Vec::new();
        for (grade, rows) in runs(out_grading) {
            for (g, cols) in &ins {
                if *g == grade {
                    blocks.push(GradeBlock { grade, rows: rows.clone(), cols: cols.clone() });
                }
            }
        }
        blocks
    }

    pub fn rows(&self) -> usize {
        self.out_grading.len()
    }

    pub fn cols(&self) -> usize {
        self.in_grading.len()
    }

    pub fn weight_base(&self) -> &[f64] {
        &self.weight_base
    }

    pub fn weight_base_mut(&mut self) -> &mut [f64] {
        &mut self.weight_base
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn activation(&self) -> ActivationKind {
        self.activation
    }

    pub fn in_grading(&self) -> &Arc<GradingVector> {
        &self.in_grading
    }

    pub fn out_grading(&self) -> &Arc<GradingVector> {
        &self.out_grading
    }

    pub fn blocks(&self) -> Option<&[GradeBlock]> {
        self.blocks.as_deref()
    }

    /// Whether weight `(j, i)` lies in a grade block. Always true for dense layers.
    pub fn in_block(&self, j: usize, i: usize) -> bool {
        match &self.blocks {
            None => true,
            Some(blocks) => blocks.iter().any(|b| b.rows.contains(&j) && b.cols.contains(&i)),
        }
    }

    /// The effective matrix `sgn(w)|w|^{q_i}`, row-major.
    pub fn effective_weights(&self) -> Vec<f64> {
        let q = self.in_grading.as_f64();
        let cols = self.cols();
        self.weight_base
            .iter()
            .enumerate()
            .map(|(k, w)| effective_weight(*w, q[k % cols]))
            .collect()
    }

    /// `W x + b`, skipping out-of-block entries when blocks are present.
    pub fn pre_activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols() {
            return Err(shape_err("layer input", self.cols(), x.len()));
        }
        let q = self.in_grading.as_f64();
        let cols = self.cols();
        let mut acc = vec![0.0f64; self.rows()];
        match &self.blocks {
            None => {
                for (j, a) in acc.iter_mut().enumerate() {
                    let row = &self.weight_base[j * cols..(j + 1) * cols];
                    for i in 0..cols {
                        *a += effective_weight(row[i], q[i]) * x[i];
                    }
                }
            }
            Some(blocks) => {
                // Blocks are sorted by starting column, so each row still sums
                // its terms in ascending column order.
                for block in blocks {
                    for j in block.rows.clone() {
                        for i in block.cols.clone() {
                            acc[j] += effective_weight(self.weight_base[j * cols + i], q[i]) * x[i];
                        }
                    }
                }
            }
        }
        for (a, b) in acc.iter_mut().zip(&self.bias) {
            *a += b;
        }
        Ok(acc)
    }

    pub(crate) fn activate(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.out_grading.as_f64())
            .map(|(v, q)| self.activation.apply(*v, *q))
            .collect()
    }

    pub fn forward(&self, x: &GradedVector) -> Result<GradedVector> {
        if **x.grading() != *self.in_grading {
            return Err(Error::Shape(format!(
                "layer expects grading {}, got {}",
                self.in_grading,
                x.grading()
            )));
        }
        let z = self.pre_activation(x.values())?;
        Ok(GradedVector::from_parts(self.activate(&z), self.out_grading.clone()))
    }
}
