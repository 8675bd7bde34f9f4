//! Reverse-mode gradients of graded networks and losses, plus a central
//! finite-difference checker that only ever calls the forward pass.

use crate::error::{Error, Result};
use crate::loss::{LossKind, PROB_FLOOR};
use crate::nn::neuron::{effective_weight, effective_weight_derivative, signed_pow};
use crate::nn::Network;
use crate::grading::{rational_to_f64, Rational};
use crate::vector::{GradedVector, HomogeneousParts};

/// Default central-difference step.
pub const DEFAULT_EPS: f64 = 1e-5;

/// Gradient of the selected loss with respect to the prediction `ŷ`.
///
/// `MaxGraded` returns the subgradient supported on the lowest-index
/// maximizer. The homogeneous loss returns zero where `ŷ = y`.
pub fn loss_grad(kind: LossKind, y: &GradedVector, yhat: &GradedVector) -> Result<GradedVector> {
    y.check_same_grading(yhat)?;
    let q = y.grading().as_f64();
    let n = y.len();
    let diff: Vec<f64> = yhat.values().iter().zip(y.values()).map(|(p, t)| p - t).collect();
    let g: Vec<f64> = match kind {
        LossKind::GradedMse => diff.iter().zip(q).map(|(d, q)| 2.0 * q * d / n as f64).collect(),
        LossKind::GradedNorm => diff.iter().zip(q).map(|(d, q)| 2.0 * q * d).collect(),
        LossKind::GradedHuber { delta } => diff
            .iter()
            .zip(q)
            .map(|(d, q)| q * if d.abs() <= delta { *d } else { delta * d.signum() })
            .collect(),
        LossKind::Homogeneous { scheme } => {
            let dv = GradedVector::from_parts(diff.clone(), y.grading().clone());
            let parts = HomogeneousParts::new(&dv, scheme)?;
            let s = parts.sum();
            if s == 0.0 {
                vec![0.0; n]
            } else {
                let outer = s.powf(1.0 / parts.r - 1.0) / parts.r;
                diff.iter()
                    .zip(y.grading().grades())
                    .map(|(d, grade)| {
                        let (_, e, norm) = parts
                            .groups
                            .iter()
                            .find(|(g, _, _)| g == grade)
                            .expect("every grade has a group");
                        if *norm == 0.0 {
                            0.0
                        } else {
                            outer * e * norm.powf(e - 2.0) * d
                        }
                    })
                    .collect()
            }
        }
        LossKind::GradedCrossEntropy => {
            if let Some(t) = y.values().iter().find(|t| **t < 0.0) {
                return Err(Error::Domain(format!("cross-entropy target {t} is negative")));
            }
            y.values()
                .iter()
                .zip(yhat.values())
                .zip(q)
                .map(|((t, p), q)| if *t != 0.0 && *p >= PROB_FLOOR { -q * t / p } else { 0.0 })
                .collect()
        }
        LossKind::MaxGraded => {
            let scaled: Vec<f64> = diff.iter().zip(q).map(|(d, q)| q.sqrt() * d.abs()).collect();
            let max = scaled.iter().copied().fold(0.0, f64::max);
            let mut g = vec![0.0; n];
            if max > 0.0 {
                let m = scaled.iter().position(|s| *s == max).expect("max is attained");
                g[m] = 2.0 * q[m].sqrt() * diff[m].signum() * max;
            }
            g
        }
    };
    Ok(GradedVector::from_parts(g, y.grading().clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weight_base: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Loss value and parameter gradients shaped like a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGradient>,
    pub head: Option<HeadGradient>,
    pub loss: f64,
}

impl GradientBundle {
    pub fn zeros_like(net: &Network) -> Self {
        GradientBundle {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient { weight_base: vec![0.0; l.weight_base().len()], bias: vec![0.0; l.rows()] })
                .collect(),
            head: net.head().map(|h| HeadGradient { weights: vec![0.0; h.weights.len()], bias: 0.0 }),
            loss: 0.0,
        }
    }

    /// All gradient entries in parameter order (per layer: weights then
    /// biases; then head weights and head bias).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(&l.weight_base);
            out.extend_from_slice(&l.bias);
        }
        if let Some(h) = &self.head {
            out.extend_from_slice(&h.weights);
            out.push(h.bias);
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.flatten().iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.flatten().iter().all(|g| g.is_finite())
    }

    /// `self += scale · other`, including the loss.
    pub fn add_scaled(&mut self, other: &GradientBundle, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight_base.iter_mut().zip(&b.weight_base) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
        if let (Some(a), Some(b)) = (&mut self.head, &other.head) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            a.bias += scale * b.bias;
        }
        self.loss += scale * other.loss;
    }
}

/// Parameters in the order used by [`GradientBundle::flatten`].
pub fn flat_params(net: &Network) -> Vec<f64> {
    let mut out = Vec::with_capacity(net.parameter_count());
    for l in net.layers() {
        out.extend_from_slice(l.weight_base());
        out.extend_from_slice(l.bias());
    }
    if let Some(h) = net.head() {
        out.extend_from_slice(&h.weights);
        out.push(h.bias);
    }
    out
}

pub fn set_flat_params(net: &mut Network, params: &[f64]) -> Result<()> {
    if params.len() != net.parameter_count() {
        return Err(crate::error::shape_err("parameter vector", net.parameter_count(), params.len()));
    }
    let mut it = params.iter().copied();
    for l in net.layers_mut() {
        for w in l.weight_base_mut() {
            *w = it.next().expect("length checked");
        }
        for b in l.bias_mut() {
            *b = it.next().expect("length checked");
        }
    }
    if let Some(h) = net.head_mut() {
        for w in &mut h.weights {
            *w = it.next().expect("length checked");
        }
        h.bias = it.next().expect("length checked");
    }
    Ok(())
}

/// Exact gradients of `kind(y, net(x))` with respect to every parameter.
pub fn network_backward(net: &Network, x: &GradedVector, y: &GradedVector, kind: LossKind) -> Result<GradientBundle> {
    let yhat = net.forward(x)?;
    let loss = kind.evaluate(y, &yhat)?;
    let dy = loss_grad(kind, y, &yhat)?;

    // Forward trace: activations[l] is the input of layer l.
    let mut activations = vec![x.values().to_vec()];
    let mut pre = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let z = layer.pre_activation(activations.last().expect("non-empty"))?;
        activations.push(layer.activate(&z));
        pre.push(z);
    }

    let mut bundle = GradientBundle::zeros_like(net);
    bundle.loss = loss;

    let mut delta: Vec<f64> = match net.head() {
        None => dy.into_values(),
        Some(h) => {
            let a = activations.last().expect("non-empty");
            let g = dy.values()[0];
            let factors = h.factors(a)?;
            let n = factors.len();
            // others[i] = Π_{j≠i} factors[j] without division.
            let mut prefix = vec![1.0; n + 1];
            for i in 0..n {
                prefix[i + 1] = prefix[i] * factors[i];
            }
            let mut suffix = vec![1.0; n + 1];
            for i in (0..n).rev() {
                suffix[i] = suffix[i + 1] * factors[i];
            }
            let hg = bundle.head.as_mut().expect("head bundle");
            hg.bias = g;
            let mut delta = vec![0.0; n];
            for i in 0..n {
                let k = h.exponents[i];
                if k == Rational::from_integer(0) {
                    continue;
                }
                let kf = rational_to_f64(&k);
                let others = prefix[i] * suffix[i + 1];
                let w = h.weights[i];
                hg.weights[i] = g * kf * w.abs().powf(kf - 1.0) * w.signum() * signed_pow(a[i], k)? * others;
                let k_minus_one = k - Rational::from_integer(1);
                let da = if k_minus_one == Rational::from_integer(0) { 1.0 } else { signed_pow(a[i], k_minus_one)? };
                delta[i] = g * w.abs().powf(kf) * kf * da * others;
            }
            delta
        }
    };

    for (l, layer) in net.layers().iter().enumerate().rev() {
        let q_in = layer.in_grading().as_f64();
        let q_out = layer.out_grading().as_f64();
        let (rows, cols) = (layer.rows(), layer.cols());
        let input = &activations[l];
        let dz: Vec<f64> = (0..rows)
            .map(|j| delta[j] * layer.activation().derivative(pre[l][j], q_out[j]))
            .collect();
        let lg = &mut bundle.layers[l];
        let mut next = vec![0.0; cols];
        for j in 0..rows {
            lg.bias[j] = dz[j];
            for i in 0..cols {
                if !layer.in_block(j, i) {
                    continue;
                }
                let w = layer.weight_base()[j * cols + i];
                lg.weight_base[j * cols + i] = dz[j] * effective_weight_derivative(w, q_in[i]) * input[i];
                next[i] += dz[j] * effective_weight(w, q_in[i]);
            }
        }
        delta = next;
    }
    Ok(bundle)
}

/// Mean loss and mean gradient over a batch, summed in index order.
pub fn batch_backward(
    net: &Network,
    inputs: &[GradedVector],
    targets: &[GradedVector],
    kind: LossKind,
) -> Result<GradientBundle> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(Error::Shape(format!(
            "batch needs matching non-empty inputs and targets, got {} and {}",
            inputs.len(),
            targets.len()
        )));
    }
    let mut total = GradientBundle::zeros_like(net);
    let scale = 1.0 / inputs.len() as f64;
    for (x, y) in inputs.iter().zip(targets) {
        total.add_scaled(&network_backward(net, x, y, kind)?, scale);
    }
    Ok(total)
}

/// Mean loss over a batch.
pub fn batch_loss(net: &Network, inputs: &[GradedVector], targets: &[GradedVector], kind: LossKind) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        total += kind.evaluate(y, &net.forward(x)?)?;
    }
    Ok(total / inputs.len() as f64)
}

/// Central-difference gradient for every parameter, using only forward
/// evaluations.
pub fn numeric_gradient(net: &Network, x: &GradedVector, y: &GradedVector, kind: LossKind, eps: f64) -> Result<Vec<f64>> {
    let base = flat_params(net);
    let mut probe = net.clone();
    let mut params = base.clone();
    let mut out = Vec::with_capacity(base.len());
    for p in 0..base.len() {
        params[p] = base[p] + eps;
        set_flat_params(&mut probe, &params)?;
        let up = kind.evaluate(y, &probe.forward(x)?)?;
        params[p] = base[p] - eps;
        set_flat_params(&mut probe, &params)?;
        let down = kind.evaluate(y, &probe.forward(x)?)?;
        params[p] = base[p];
        out.push((up - down) / (2.0 * eps));
    }
    Ok(out)
}

/// Largest `|analytic − numeric| / max(1, |numeric|)` over all parameters.
pub fn finite_diff_check(net: &Network, x: &GradedVector, y: &GradedVector, kind: LossKind, eps: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&eps) {
        return Err(Error::Domain(format!("finite-difference eps {eps} outside [1e-7, 1e-4]")));
    }
    let analytic = network_backward(net, x, y, kind)?.flatten();
    let numeric = numeric_gradient(net, x, y, kind, eps)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / n.abs().max(1.0))
        .fold(0.0, f64::max))
}

/// Derivative of `ρ_δ` itself, exposed for callers that need the scalar form.
pub fn huber_rho_derivative(z: f64, delta: f64) -> f64 {
    if z.abs() <= delta {
        z
    } else {
        delta * z.signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grading::GradingVector;
    use crate::nn::{ActivationKind, Layer, MultiplicativeNeuron};
    use crate::vector::NormScheme;
    use std::sync::Arc;

    const Q23: &str = "2,2,2,3,3,3,3";

    fn g(s: &str) -> Arc<GradingVector> {
        Arc::new(s.parse().unwrap())
    }

    fn v(values: &[f64], q: &str) -> GradedVector {
        GradedVector::new(values.to_vec(), g(q)).unwrap()
    }

    fn worked_pair() -> (GradedVector, GradedVector) {
        (
            v(&[1.0, 0.0, 1.0, 1.0, -1.0, 0.0, 1.0], Q23),
            v(&[0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0], Q23),
        )
    }

    #[test]
    fn graded_norm_gradient_on_worked_vectors() {
        // ŷ − y = (−1, 1, −1, 0, 1, −1, −1), so 2 q_i Δ_i:
        let (y, yh) = worked_pair();
        let grad = loss_grad(LossKind::GradedNorm, &y, &yh).unwrap();
        assert_eq!(grad.values(), &[-4.0, 4.0, -4.0, 0.0, 6.0, -6.0, -6.0]);
        assert_eq!(loss_grad(LossKind::GradedNorm, &y, &y).unwrap().values(), &[0.0; 7]);
    }

    #[test]
    fn max_graded_subgradient_lowest_index() {
        let y = v(&[0.0, 0.0, 0.0], "1,4,4");
        let yh = v(&[1.0, -0.5, 0.5], "1,4,4");
        // scaled errors (1, 1, 1): tie broken at index 0.
        let grad = loss_grad(LossKind::MaxGraded, &y, &yh).unwrap();
        assert_eq!(grad.values(), &[2.0, 0.0, 0.0]);
        let yh = v(&[0.1, -0.5, 0.2], "1,4,4");
        let grad = loss_grad(LossKind::MaxGraded, &y, &yh).unwrap();
        // unique max at 1: 2 · 2 · (−1) · 1
        assert_eq!(grad.values(), &[0.0, -4.0, 0.0]);
    }

    #[test]
    fn homogeneous_gradient_zero_at_origin() {
        let (y, _) = worked_pair();
        let grad = loss_grad(LossKind::Homogeneous { scheme: NormScheme::ByDistinctCount }, &y, &y).unwrap();
        assert_eq!(grad.values(), &[0.0; 7]);
    }

    #[test]
    fn loss_gradients_match_central_differences() {
        let y = v(&[0.3, 0.1, 0.5, 0.2], "1,2,2,3");
        let yh = v(&[0.7, 0.45, 0.25, 0.9], "1,2,2,3");
        let kinds = [
            LossKind::GradedMse,
            LossKind::GradedNorm,
            LossKind::GradedHuber { delta: 0.3 },
            LossKind::Homogeneous { scheme: NormScheme::ByDistinctCount },
            LossKind::Homogeneous { scheme: NormScheme::ByMaxGrade },
            LossKind::GradedCrossEntropy,
            LossKind::MaxGraded,
        ];
        let h = 1e-6;
        for kind in kinds {
            let grad = loss_grad(kind, &y, &yh).unwrap();
            for i in 0..4 {
                let mut up = yh.values().to_vec();
                let mut down = yh.values().to_vec();
                up[i] += h;
                down[i] -= h;
                let numeric = (kind.evaluate(&y, &v(&up, "1,2,2,3")).unwrap()
                    - kind.evaluate(&y, &v(&down, "1,2,2,3")).unwrap())
                    / (2.0 * h);
                assert!((numeric - grad.values()[i]).abs() < 1e-6, "{kind} coordinate {i}");
            }
        }
    }

    #[test]
    fn single_neuron_chain_rule() {
        // ŷ = 1² · 2 = 2, L = 2 · 2² = 8, ∂L/∂w = (2·2·2)·(2·1·2) = 32.
        let layer = Layer::new(vec![1.0], vec![0.0], ActivationKind::Identity, g("2"), g("2")).unwrap();
        let net = Network::new(g("2"), vec![layer], None).unwrap();
        let b = network_backward(&net, &v(&[2.0], "2"), &v(&[0.0], "2"), LossKind::GradedNorm).unwrap();
        assert_eq!(b.loss, 8.0);
        assert_eq!(b.layers[0].weight_base, vec![32.0]);
        assert_eq!(b.layers[0].bias, vec![8.0]);
    }

    #[test]
    fn zero_loss_gives_zero_bundle() {
        let layer = Layer::new(vec![0.5, 0.7], vec![0.1], ActivationKind::GradedExp, g("2,3"), g("2")).unwrap();
        let net = Network::new(g("2,3"), vec![layer], None).unwrap();
        let x = v(&[0.4, 0.9], "2,3");
        let y = net.forward(&x).unwrap();
        let b = network_backward(&net, &x, &y, LossKind::GradedNorm).unwrap();
        assert!(b.flatten().iter().all(|g| *g == 0.0));
        assert_eq!(b.loss, 0.0);
    }

    #[test]
    fn quadratic_in_bias_is_exact() {
        let layer = Layer::new(vec![0.5, 0.25], vec![0.1], ActivationKind::Identity, g("1,1"), g("1")).unwrap();
        let net = Network::new(g("1,1"), vec![layer], None).unwrap();
        for eps in [1e-7, 1e-5, 1e-4] {
            let err = finite_diff_check(&net, &v(&[1.0, 2.0], "1,1"), &v(&[3.0], "1"), LossKind::GradedNorm, eps).unwrap();
            assert!(err < 1e-9, "eps {eps}: {err}");
        }
    }

    #[test]
    fn head_gradients_match_finite_differences() {
        let layer =
            Layer::new(vec![0.6, 0.3, 0.8, 0.5], vec![0.2, 0.1], ActivationKind::GradedExp, g("2,3"), g("1,2")).unwrap();
        let head = MultiplicativeNeuron::new(
            vec![0.9, 1.1],
            vec![Rational::from_integer(2), Rational::new(3, 2)],
            0.05,
            g("1,2"),
        )
        .unwrap();
        let net = Network::new(g("2,3"), vec![layer], Some(head)).unwrap();
        let x = v(&[0.7, 1.2], "2,3");
        let y = v(&[0.4], "5");
        let err = finite_diff_check(&net, &x, &y, LossKind::GradedNorm, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn eps_range_enforced() {
        let net = Network::identity(g("1"));
        assert!(finite_diff_check(&net, &v(&[1.0], "1"), &v(&[1.0], "1"), LossKind::GradedNorm, 1e-2).is_err());
    }

    #[test]
    fn flat_params_round_trip() {
        let layer = Layer::new(vec![0.6, 0.3], vec![0.2], ActivationKind::Identity, g("2,3"), g("1")).unwrap();
        let mut net = Network::new(g("2,3"), vec![layer], None).unwrap();
        let p = flat_params(&net);
        assert_eq!(p, vec![0.6, 0.3, 0.2]);
        set_flat_params(&mut net, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(flat_params(&net), vec![1.0, 2.0, 3.0]);
        assert!(set_flat_params(&mut net, &[1.0]).is_err());
    }
}
