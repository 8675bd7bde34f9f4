//! Plain dense MLP with hand-written backpropagation.
//!
//! This shares no code with the graded stack on purpose: it is the oracle for
//! the reduction to classical networks, and the fast trainer for the
//! classical side of the approximation benchmark.

use anyhow::{ensure, Result};
use graded::nn::{ActivationKind, Layer, Network};
use graded::GradingVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hidden {
    Relu,
    /// `exp(x) − 1`, what the graded exponential becomes at grade 1.
    ExpM1,
}

impl Hidden {
    fn apply(self, z: f64) -> f64 {
        match self {
            Hidden::Relu => z.max(0.0),
            Hidden::ExpM1 => z.exp_m1(),
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Hidden::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Hidden::ExpM1 => z.exp(),
        }
    }
}

/// `widths = [inputs, hidden..., outputs]`; layer `l` holds a row-major
/// `widths[l+1] × widths[l]` matrix. Hidden layers use `hidden`, the last
/// layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalMlp {
    pub widths: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub hidden: Hidden,
}

impl ClassicalMlp {
    pub fn new(widths: Vec<usize>, weights: Vec<Vec<f64>>, biases: Vec<Vec<f64>>, hidden: Hidden) -> Result<Self> {
        ensure!(widths.len() >= 2, "an MLP needs input and output widths");
        ensure!(weights.len() == widths.len() - 1 && biases.len() == widths.len() - 1, "one weight and bias per layer");
        for l in 0..weights.len() {
            ensure!(weights[l].len() == widths[l] * widths[l + 1], "layer {l} weight count");
            ensure!(biases[l].len() == widths[l + 1], "layer {l} bias count");
        }
        Ok(ClassicalMlp { widths, weights, biases, hidden })
    }

    /// Weights uniform in `(-1, 1)`, hidden biases uniform in `(-1, 1)`,
    /// output bias zero.
    pub fn random(widths: Vec<usize>, hidden: Hidden, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = widths.len() - 1;
        let weights = (0..layers)
            .map(|l| (0..widths[l] * widths[l + 1]).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let biases = (0..layers)
            .map(|l| {
                let hidden_layer = l + 1 < layers;
                (0..widths[l + 1]).map(|_| if hidden_layer { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect()
            })
            .collect();
        ClassicalMlp { widths, weights, biases, hidden }
    }

    fn layer_count(&self) -> usize {
        self.weights.len()
    }

    /// Pre-activations and activations for every layer; `acts[0] = x`.
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![x.to_vec()];
        let mut pres = Vec::with_capacity(self.layer_count());
        for l in 0..self.layer_count() {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let a = &acts[l];
            let mut z = vec![0.0; n_out];
            for (j, zj) in z.iter_mut().enumerate() {
                let mut s = 0.0;
                for i in 0..n_in {
                    s += self.weights[l][j * n_in + i] * a[i];
                }
                *zj = s + self.biases[l][j];
            }
            let out = if l + 1 < self.layer_count() { z.iter().map(|v| self.hidden.apply(*v)).collect() } else { z.clone() };
            pres.push(z);
            acts.push(out);
        }
        (pres, acts)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).1.pop().expect("at least one layer")
    }

    /// Mean over samples of `Σ (ŷ − y)²`, and its gradient.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, y) in xs.iter().zip(ys) {
            let (pres, acts) = self.trace(x);
            let out = acts.last().expect("output");
            let mut delta: Vec<f64> = out.iter().zip(y).map(|(p, t)| 2.0 * (p - t)).collect();
            loss += scale * out.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
            for l in (0..self.layer_count()).rev() {
                let n_in = self.widths[l];
                if l + 1 < self.layer_count() {
                    for (d, z) in delta.iter_mut().zip(&pres[l]) {
                        *d *= self.hidden.derivative(*z);
                    }
                }
                let mut next = vec![0.0; n_in];
                for (j, d) in delta.iter().enumerate() {
                    gb[l][j] += scale * d;
                    for i in 0..n_in {
                        gw[l][j * n_in + i] += scale * d * acts[l][i];
                        next[i] += d * self.weights[l][j * n_in + i];
                    }
                }
                delta = next;
            }
        }
        (loss, gw, gb)
    }

    /// Full-batch gradient descent with momentum; entry `t` of the result is
    /// the loss before update `t`.
    pub fn train_gd(&mut self, xs: &[Vec<f64>], ys: &[Vec<f64>], eta: f64, momentum: f64, iters: usize) -> Vec<f64> {
        let mut vw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut vb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut history = Vec::with_capacity(iters + 1);
        for t in 0..=iters {
            let (loss, gw, gb) = self.loss_and_grad(xs, ys);
            history.push(loss);
            if t == iters || !loss.is_finite() {
                break;
            }
            for l in 0..self.layer_count() {
                for ((w, v), g) in self.weights[l].iter_mut().zip(&mut vw[l]).zip(&gw[l]) {
                    *v = momentum * *v - eta * g;
                    *w += *v;
                }
                for ((b, v), g) in self.biases[l].iter_mut().zip(&mut vb[l]).zip(&gb[l]) {
                    *v = momentum * *v - eta * g;
                    *b += *v;
                }
            }
        }
        history
    }

    /// Adds hidden units with zero outgoing weights, which leaves the
    /// function unchanged. Only single-hidden-layer networks are widened.
    pub fn widen(&self, hidden_units: usize, seed: u64) -> Self {
        assert_eq!(self.widths.len(), 3, "widen expects one hidden layer");
        let (n, h, o) = (self.widths[0], self.widths[1], self.widths[2]);
        if hidden_units <= h {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let extra = hidden_units - h;
        let mut w0 = self.weights[0].clone();
        w0.extend((0..extra * n).map(|_| rng.gen_range(-1.0..1.0)));
        let mut b0 = self.biases[0].clone();
        b0.extend((0..extra).map(|_| rng.gen_range(-1.0..1.0)));
        let mut w1 = Vec::with_capacity(o * hidden_units);
        for k in 0..o {
            w1.extend_from_slice(&self.weights[1][k * h..(k + 1) * h]);
            w1.extend(std::iter::repeat_n(0.0, extra));
        }
        ClassicalMlp {
            widths: vec![n, hidden_units, o],
            weights: vec![w0, w1],
            biases: vec![b0, self.biases[1].clone()],
            hidden: self.hidden,
        }
    }

    /// The same network expressed with all-ones gradings.
    pub fn to_graded(&self) -> graded::Result<Network> {
        let act = match self.hidden {
            Hidden::Relu => ActivationKind::ClassicalRelu,
            Hidden::ExpM1 => ActivationKind::GradedExp,
        };
        let gradings: Vec<Arc<GradingVector>> =
            self.widths.iter().map(|w| Arc::new(GradingVector::ones(*w))).collect();
        let layers = (0..self.layer_count())
            .map(|l| {
                let a = if l + 1 < self.layer_count() { act } else { ActivationKind::Identity };
                Layer::new(self.weights[l].clone(), self.biases[l].clone(), a, gradings[l].clone(), gradings[l + 1].clone())
            })
            .collect::<graded::Result<Vec<_>>>()?;
        Network::new(gradings[0].clone(), layers, None)
    }
}

/// Forward pass of a plain ReLU MLP with a scalar output.
pub fn classical_mlp_forward(widths: &[usize], weights: &[Vec<f64>], biases: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    ensure!(widths.last() == Some(&1), "classical_mlp_forward expects a scalar output");
    ensure!(widths.first() == Some(&x.len()), "input has {} entries, widths start with {:?}", x.len(), widths.first());
    let mlp = ClassicalMlp::new(widths.to_vec(), weights.to_vec(), biases.to_vec(), Hidden::Relu)?;
    Ok(mlp.forward(x)[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_pass_bias_through() {
        let y = classical_mlp_forward(&[2, 2, 1], &[vec![0.0; 4], vec![0.0; 2]], &[vec![0.0; 2], vec![0.7]], &[3.0, 4.0]);
        assert_eq!(y.unwrap(), 0.7);
    }

    #[test]
    fn single_relu_is_identity_on_positive_inputs() {
        let y = classical_mlp_forward(&[1, 1, 1], &[vec![1.0], vec![1.0]], &[vec![0.0], vec![0.0]], &[0.3]);
        assert_eq!(y.unwrap(), 0.3);
        let y = classical_mlp_forward(&[1, 1, 1], &[vec![1.0], vec![1.0]], &[vec![0.0], vec![0.0]], &[-0.3]);
        assert_eq!(y.unwrap(), 0.0);
    }

    #[test]
    fn shape_errors() {
        assert!(classical_mlp_forward(&[2, 1], &[vec![0.0; 3]], &[vec![0.0]], &[1.0, 2.0]).is_err());
        assert!(classical_mlp_forward(&[2, 1], &[vec![0.0; 2]], &[vec![0.0]], &[1.0]).is_err());
    }

    #[test]
    fn widening_preserves_function() {
        let mlp = ClassicalMlp::random(vec![2, 3, 1], Hidden::Relu, 4);
        let wide = mlp.widen(8, 5);
        for x in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.02]] {
            assert_eq!(mlp.forward(&x), wide.forward(&x));
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mlp = ClassicalMlp::random(vec![2, 4, 1], Hidden::ExpM1, 2);
        let xs = vec![vec![0.3, 0.7], vec![0.9, 0.1]];
        let ys = vec![vec![0.5], vec![-0.2]];
        let (_, gw, _) = mlp.loss_and_grad(&xs, &ys);
        let h = 1e-6;
        for k in 0..mlp.weights[0].len() {
            let mut up = mlp.clone();
            up.weights[0][k] += h;
            let mut down = mlp.clone();
            down.weights[0][k] -= h;
            let fd = (up.loss_and_grad(&xs, &ys).0 - down.loss_and_grad(&xs, &ys).0) / (2.0 * h);
            assert!((fd - gw[0][k]).abs() < 1e-7);
        }
    }
}
