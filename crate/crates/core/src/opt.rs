//! Grade-adaptive gradient descent.
//!
//! Weight `w_{j,i}` moves with rate `η / q_i` where `q_i` is the grade of its
//! input coordinate, and bias `b_j` with `η / r_j` for output grade `r_j`.
//! With the all-ones grading and no momentum this is plain gradient descent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grad::{batch_backward, flat_params, set_flat_params, GradientBundle};
use crate::grading::rational_to_f64;
use crate::loss::LossKind;
use crate::nn::Network;
use crate::vector::GradedVector;

/// Initial weights are drawn uniformly from this range; biases start at 0.
pub const INIT_RANGE: (f64, f64) = (0.2, 0.9);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Base rate `η`.
    pub eta: f64,
    /// Momentum `β` in `[0, 1)`.
    pub momentum: f64,
    pub max_iter: usize,
    /// Stop once the loss fell by less than `tol` over the last `window`
    /// iterations. Zero disables the check.
    pub tol: f64,
    pub window: usize,
    /// Stop as soon as the loss is at or below this value.
    pub target_loss: Option<f64>,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { eta: 0.01, momentum: 0.0, max_iter: 1000, tol: 0.0, window: 10, target_loss: None, seed: 0 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Domain(format!("learning rate must be positive, got {}", self.eta)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Domain(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if self.tol < 0.0 || self.window == 0 {
            return Err(Error::Domain("stop threshold must be non-negative with a positive window".into()));
        }
        Ok(())
    }
}

/// Per-parameter rates `η_i` in the order of [`flat_params`].
pub fn grade_rates(net: &Network, eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(net.parameter_count());
    for l in net.layers() {
        let q_in = l.in_grading().as_f64();
        for _ in 0..l.rows() {
            out.extend(q_in.iter().map(|q| eta / q));
        }
        out.extend(l.out_grading().as_f64().iter().map(|r| eta / r));
    }
    if let Some(h) = net.head() {
        out.extend(h.grading.as_f64().iter().map(|q| eta / q));
        out.push(eta / net.output_grading().as_f64()[0]);
    }
    out
}

/// Stateful optimizer carrying the momentum buffer.
#[derive(Debug, Clone)]
pub struct GradedSgd {
    eta: f64,
    momentum: f64,
    velocity: Vec<f64>,
}

impl GradedSgd {
    pub fn new(cfg: &OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(GradedSgd { eta: cfg.eta, momentum: cfg.momentum, velocity: Vec::new() })
    }

    /// `v ← βv − η_i g`, then `θ ← θ + v`.
    pub fn step(&mut self, net: &mut Network, bundle: &GradientBundle) -> Result<()> {
        let grads = bundle.flatten();
        let mut params = flat_params(net);
        if grads.len() != params.len() {
            return Err(crate::error::shape_err("gradient bundle", params.len(), grads.len()));
        }
        let rates = grade_rates(net, self.eta);
        if self.velocity.len() != params.len() {
            self.velocity = vec![0.0; params.len()];
        }
        for ((p, v), (g, rate)) in params.iter_mut().zip(&mut self.velocity).zip(grads.iter().zip(&rates)) {
            *v = self.momentum * *v - rate * g;
            *p += *v;
        }
        set_flat_params(net, &params)
    }
}

/// One momentum-free step with rates from `cfg`.
pub fn sgd_step(net: &mut Network, bundle: &GradientBundle, cfg: &OptimizerConfig) -> Result<()> {
    let cfg = OptimizerConfig { momentum: 0.0, ..cfg.clone() };
    GradedSgd::new(&cfg)?.step(net, bundle)
}

/// Draws every in-block weight from [`INIT_RANGE`], zeroes the rest and
/// every bias.
pub fn init_uniform(net: &mut Network, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = INIT_RANGE;
    for l in net.layers_mut() {
        let cols = l.cols();
        let mask: Vec<bool> = (0..l.weight_base().len()).map(|k| l.in_block(k / cols, k % cols)).collect();
        for (w, inside) in l.weight_base_mut().iter_mut().zip(mask) {
            *w = if inside { rng.gen_range(lo..hi) } else { 0.0 };
        }
        l.bias_mut().fill(0.0);
    }
    if let Some(h) = net.head_mut() {
        for w in &mut h.weights {
            *w = rng.gen_range(lo..hi);
        }
        h.bias = 0.0;
    }
}

/// Step-size bound `Λ = 2 · max q² · max ‖x‖²` for the linear graded-norm
/// problem; rates below `1/Λ` give monotone descent there.
pub fn lipschitz_estimate(max_grade: f64, max_input_norm_sq: f64) -> f64 {
    2.0 * max_grade * max_grade * max_input_norm_sq
}

/// Largest grade appearing anywhere in the network.
pub fn max_grade(net: &Network) -> f64 {
    let mut m = net.input_grading().max_grade();
    for l in net.layers() {
        m = m.max(l.out_grading().max_grade());
    }
    m = m.max(net.output_grading().max_grade());
    rational_to_f64(&m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainRecord {
    pub iter: usize,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIter,
    Stalled,
    TargetReached,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: Network,
    /// Entry `t` is the mean loss before update `t`; entry 0 is the initial loss.
    pub history: Vec<TrainRecord>,
    pub stop: StopReason,
}

impl TrainOutcome {
    pub fn losses(&self) -> Vec<f64> {
        self.history.iter().map(|r| r.loss).collect()
    }

    pub fn final_loss(&self) -> f64 {
        self.history.last().expect("history holds the initial loss").loss
    }
}

/// Full-batch training on the mean loss. Deterministic for fixed inputs.
pub fn train(
    net: Network,
    inputs: &[GradedVector],
    targets: &[GradedVector],
    kind: LossKind,
    cfg: &OptimizerConfig,
) -> Result<TrainOutcome> {
    train_with(net, inputs, targets, kind, cfg, |_| {})
}

/// [`train`] with a callback invoked on every recorded iteration.
pub fn train_with(
    mut net: Network,
    inputs: &[GradedVector],
    targets: &[GradedVector],
    kind: LossKind,
    cfg: &OptimizerConfig,
    mut on_record: impl FnMut(&TrainRecord),
) -> Result<TrainOutcome> {
    let mut sgd = GradedSgd::new(cfg)?;
    let mut history: Vec<TrainRecord> = Vec::new();
    let mut iter = 0;
    let stop = loop {
        let bundle = batch_backward(&net, inputs, targets, kind)?;
        if !bundle.is_finite() {
            return Err(Error::NonFinite { iteration: iter, location: locate_non_finite(&net, inputs) });
        }
        let record = TrainRecord { iter, loss: bundle.loss, grad_norm: bundle.norm() };
        on_record(&record);
        history.push(record);

        if cfg.target_loss.is_some_and(|t| bundle.loss <= t) {
            break StopReason::TargetReached;
        }
        if cfg.tol > 0.0 && iter >= cfg.window && history[iter - cfg.window].loss - bundle.loss < cfg.tol {
            break StopReason::Stalled;
        }
        if iter == cfg.max_iter {
            break StopReason::MaxIter;
        }
        sgd.step(&mut net, &bundle)?;
        iter += 1;
    };
    Ok(TrainOutcome { net, history, stop })
}

fn locate_non_finite(net: &Network, inputs: &[GradedVector]) -> String {
    for (s, x) in inputs.iter().enumerate() {
        if let Some(idx) = net.first_non_finite(x) {
            let place =
                if idx == net.layers().len() { "multiplicative head".to_string() } else { format!("layer {idx}") };
            return format!("{place} on sample {s}");
        }
    }
    "loss or gradient".to_string()
}
