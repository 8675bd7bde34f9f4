//! Experiment configuration, read from a single JSON document.
//!
//! Gradings and exponent lists are written as comma-separated rationals,
//! e.g. `"2,4,6,10"` or `"1/2,1"`. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use graded::grading::{parse_rational, parse_rationals};
use graded::nn::{ActivationKind, Layer, MultiplicativeNeuron, Network};
use graded::{GradingVector, LossKind, OptimizerConfig, Rational};
use serde::Deserialize;

use crate::dataset::{gen_graded_linear_dataset, gen_homogeneous_polynomial_dataset, gen_monomial_dataset, Dataset};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Input grading.
    pub grading: GradingVector,
    pub model: ModelSpec,
    /// Loss name as accepted by [`LossKind`]'s parser.
    pub loss: String,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    pub data: DataSpec,
    pub output: OutputSpec,
    /// Seeds dataset generation. Initialization uses `optimizer.seed`.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub layers: Vec<LayerSpec>,
    /// Optional multiplicative neuron after the layers.
    #[serde(default)]
    pub head: Option<HeadSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub out_grading: GradingVector,
    pub activation: ActivationKind,
    /// Restrict weights to pairs of equal grade.
    #[serde(default)]
    pub grade_blocks: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    pub exponents: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Monomial { exponents: String, coefficient: f64, domain: Vec<(f64, f64)>, count: usize },
    GradedLinear { domain: Vec<(f64, f64)>, count: usize },
    HomogeneousPolynomial { degree: String, terms: usize, domain: Vec<(f64, f64)>, count: usize },
    Csv { path: PathBuf, output_grading: GradingVector },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub metrics: PathBuf,
    pub model: PathBuf,
}

impl ExperimentConfig {
    /// Parses the file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output.metrics);
        resolve(&mut cfg.output.model);
        if let DataSpec::Csv { path, .. } = &mut cfg.data {
            resolve(path);
        }
        Ok(cfg)
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        self.loss.parse().with_context(|| format!("unknown loss {:?}", self.loss))
    }

    pub fn input_grading(&self) -> Arc<GradingVector> {
        Arc::new(self.grading.clone())
    }

    pub fn dataset(&self) -> Result<Dataset> {
        let q = self.input_grading();
        let data = match &self.data {
            DataSpec::Monomial { exponents, coefficient, domain, count } => {
                let k = parse_rationals(exponents)?;
                gen_monomial_dataset(q, &k, *coefficient, domain, *count, self.seed)?
            }
            DataSpec::GradedLinear { domain, count } => gen_graded_linear_dataset(q, domain, *count, self.seed)?,
            DataSpec::HomogeneousPolynomial { degree, terms, domain, count } => {
                gen_homogeneous_polynomial_dataset(q, parse_rational(degree)?, *terms, domain, *count, self.seed)?
            }
            DataSpec::Csv { path, output_grading } => {
                ensure!(path.exists(), "dataset {} does not exist", path.display());
                Dataset::read_csv(path, q, Arc::new(output_grading.clone()))?
            }
        };
        Ok(data)
    }

    /// The untrained network: zero weights and biases, head weights 1.
    pub fn network(&self) -> Result<Network> {
        let mut current = self.input_grading();
        let mut layers = Vec::with_capacity(self.model.layers.len());
        for (l, spec) in self.model.layers.iter().enumerate() {
            let out = Arc::new(spec.out_grading.clone());
            let (rows, cols) = (out.len(), current.len());
            let mut layer = Layer::new(vec![0.0; rows * cols], vec![0.0; rows], spec.activation, current.clone(), out.clone())
                .with_context(|| format!("layer {l}"))?;
            if spec.grade_blocks {
                let blocks = Layer::grade_blocks_for(&current, &out);
                ensure!(!blocks.is_empty(), "layer {l}: gradings {current} and {out} share no grade");
                layer = layer.with_blocks(blocks)?;
            }
            layers.push(layer);
            current = out;
        }
        let head = match &self.model.head {
            None => None,
            Some(h) => {
                let k: Vec<Rational> = parse_rationals(&h.exponents)?;
                Some(MultiplicativeNeuron::new(vec![1.0; k.len()], k, 0.0, current.clone())?)
            }
        };
        Ok(Network::new(self.input_grading(), layers, head)?)
    }
}
