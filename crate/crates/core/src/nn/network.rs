use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::activation::ActivationKind;
use super::layer::{GradeBlock, Layer};
use super::neuron::MultiplicativeNeuron;
use crate::error::{Error, Result};
use crate::grading::{GradingVector, Rational};
use crate::vector::GradedVector;

/// `Φ = φ_m ∘ ⋯ ∘ φ_1`, optionally followed by one multiplicative neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_grading: Arc<GradingVector>,
    pub(crate) layers: Vec<Layer>,
    pub(crate) head: Option<MultiplicativeNeuron>,
    output_grading: Arc<GradingVector>,
}

/// Output grading of a multiplicative head: its degree, or 1 for degree 0.
fn head_grading(head: &MultiplicativeNeuron) -> Arc<GradingVector> {
    let d = head.degree();
    let d = if d > Rational::from_integer(0) { d } else { Rational::from_integer(1) };
    Arc::new(GradingVector::new(vec![d]).expect("positive degree"))
}

impl Network {
    /// Chains `layers`, checking that each layer's input grading equals the
    /// previous layer's output grading.
    pub fn new(
        input_grading: Arc<GradingVector>,
        layers: Vec<Layer>,
        head: Option<MultiplicativeNeuron>,
    ) -> Result<Self> {
        let mut current = input_grading.clone();
        for (l, layer) in layers.iter().enumerate() {
            if *layer.in_grading != *current {
                return Err(Error::Shape(format!(
                    "layer {l} expects grading {}, previous output is {current}",
                    layer.in_grading
                )));
            }
            current = layer.out_grading.clone();
        }
        if let Some(h) = &head {
            if *h.grading != *current {
                return Err(Error::Shape(format!(
                    "multiplicative head expects grading {}, previous output is {current}",
                    h.grading
                )));
            }
            current = head_grading(h);
        }
        Ok(Self { input_grading, layers, head, output_grading: current })
    }

    pub fn identity(grading: Arc<GradingVector>) -> Self {
        Self { input_grading: grading.clone(), layers: Vec::new(), head: None, output_grading: grading }
    }

    pub fn input_grading(&self) -> &Arc<GradingVector> {
        &self.input_grading
    }

    pub fn output_grading(&self) -> &Arc<GradingVector> {
        &self.output_grading
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn head(&self) -> Option<&MultiplicativeNeuron> {
        self.head.as_ref()
    }

    pub fn head_mut(&mut self) -> Option<&mut MultiplicativeNeuron> {
        self.head.as_mut()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight_base.len() + l.bias.len()).sum::<usize>()
            + self.head.as_ref().map_or(0, |h| h.weights.len() + 1)
    }

    pub fn forward(&self, x: &GradedVector) -> Result<GradedVector> {
        if **x.grading() != *self.input_grading {
            return Err(Error::Shape(format!(
                "network expects grading {}, got {}",
                self.input_grading,
                x.grading()
            )));
        }
        let mut current = x.clone();
        for layer in &self.layers {
            current = layer.forward(&current)?;
        }
        if let Some(h) = &self.head {
            let y = h.forward_values(current.values())?;
            current = GradedVector::from_parts(vec![y], self.output_grading.clone());
        }
        Ok(current)
    }

    /// Index of the first layer whose output is non-finite on `x`
    /// (`layers.len()` denotes the head).
    pub fn first_non_finite(&self, x: &GradedVector) -> Option<usize> {
        let mut current = x.values().to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let z = layer.pre_activation(&current).ok()?;
            current = layer.activate(&z);
            if current.iter().any(|v| !v.is_finite()) {
                return Some(l);
            }
        }
        match &self.head {
            Some(h) => match h.forward_values(&current) {
                Ok(v) if v.is_finite() => None,
                _ => Some(self.layers.len()),
            },
            None => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkDoc::from(self)).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.try_into()
    }
}

/// On-disk form of a network.
///
/// `gradings[0]` is the input grading and `gradings[l + 1]` the output
/// grading of layer `l`. Weight bases are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub gradings: Vec<GradingVector>,
    pub layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head: Option<HeadDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDoc {
    pub rows: usize,
    pub cols: usize,
    pub weight_base: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<BlockDoc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub grade: String,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadDoc {
    pub weights: Vec<f64>,
    pub exponents: Vec<String>,
    pub bias: f64,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        let mut gradings = vec![(*net.input_grading).clone()];
        gradings.extend(net.layers.iter().map(|l| (*l.out_grading).clone()));
        let layers = net
            .layers
            .iter()
            .map(|l| LayerDoc {
                rows: l.rows(),
                cols: l.cols(),
                weight_base: l.weight_base.clone(),
                bias: l.bias.clone(),
                activation: l.activation,
                blocks: l.blocks.as_ref().map(|bs| {
                    bs.iter()
                        .map(|b| BlockDoc { grade: b.grade.to_string(), rows: b.rows.clone(), cols: b.cols.clone() })
                        .collect()
                }),
            })
            .collect();
        let head = net.head.as_ref().map(|h| HeadDoc {
            weights: h.weights.clone(),
            exponents: h.exponents.iter().map(|k| k.to_string()).collect(),
            bias: h.bias,
        });
        NetworkDoc { gradings, layers, head }
    }
}

impl TryFrom<NetworkDoc> for Network {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        if doc.gradings.len() != doc.layers.len() + 1 {
            return Err(Error::Shape(format!(
                "{} layers need {} gradings, found {}",
                doc.layers.len(),
                doc.layers.len() + 1,
                doc.gradings.len()
            )));
        }
        let gradings: Vec<Arc<GradingVector>> = doc.gradings.into_iter().map(Arc::new).collect();
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (l, ld) in doc.layers.into_iter().enumerate() {
            let (input, output) = (gradings[l].clone(), gradings[l + 1].clone());
            if ld.rows != output.len() || ld.cols != input.len() {
                return Err(Error::Shape(format!(
                    "layer {l} declares {}x{}, gradings give {}x{}",
                    ld.rows,
                    ld.cols,
                    output.len(),
                    input.len()
                )));
            }
            let mut layer = Layer::new(ld.weight_base, ld.bias, ld.activation, input, output)?;
            if let Some(blocks) = ld.blocks {
                let blocks = blocks
                    .into_iter()
                    .map(|b| {
                        Ok(GradeBlock {
                            grade: crate::grading::parse_rational(&b.grade)?,
                            rows: b.rows,
                            cols: b.cols,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                layer = layer.with_blocks(blocks)?;
            }
            layers.push(layer);
        }
        let last = gradings.last().expect("at least one grading").clone();
        let head = doc
            .head
            .map(|h| {
                let exponents = h
                    .exponents
                    .iter()
                    .map(|k| crate::grading::parse_rational(k))
                    .collect::<Result<Vec<Rational>>>()?;
                MultiplicativeNeuron::new(h.weights, exponents, h.bias, last)
            })
            .transpose()?;
        Network::new(gradings[0].clone(), layers, head)
    }
}
