//! Error against neuron count for `f = x_1^{q_1} x_2^{q_2}`.
//!
//! One multiplicative neuron with exponents `q` represents `f` exactly. The
//! classical side trains one-hidden-layer ReLU networks of growing width,
//! keeps the best of several restarts, and also offers the previous width's
//! winner (widened with silent units) as a candidate. Selection uses the
//! training grid only; errors are reported on a finer held-out grid.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{ensure, Context, Result};
use graded::opt::{init_uniform, train};
use graded::{GradedVector, GradingVector, LossKind, MultiplicativeNeuron, Network, OptimizerConfig, Rational};
use rayon::prelude::*;
use serde::Deserialize;

use crate::dataset::monomial_value;
use crate::fmt_f64;
use crate::mlp::{ClassicalMlp, Hidden};

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Grades `(q_1, q_2)`, which are also the target's exponents.
    pub grading: GradingVector,
    pub widths: Vec<usize>,
    pub restarts: usize,
    /// Points per side of the training grid.
    pub train_grid: usize,
    /// Points per side of the held-out grid.
    pub eval_grid: usize,
    pub domain: (f64, f64),
    pub iterations: usize,
    pub eta: f64,
    pub momentum: f64,
    /// Optimizer for the trained multiplicative neuron.
    pub graded: OptimizerConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            grading: GradingVector::from_integers(&[2, 3]).expect("positive"),
            widths: vec![1, 2, 4, 8, 16, 32],
            restarts: 5,
            train_grid: 26,
            eval_grid: 101,
            domain: (0.01, 1.0),
            iterations: 3000,
            eta: 0.05,
            momentum: 0.9,
            graded: OptimizerConfig { eta: 0.05, momentum: 0.9, max_iter: 5000, target_loss: Some(1e-26), ..Default::default() },
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.grading.len() == 2, "the benchmark target has two inputs, grading is {}", self.grading);
        ensure!(self.train_grid >= 2 && self.eval_grid >= 2, "grids need at least two points per side");
        let (lo, hi) = self.domain;
        ensure!(lo > 0.0 && lo < hi && hi.is_finite(), "domain must lie inside (0, inf), got [{lo}, {hi}]");
        ensure!(self.restarts >= 1, "at least one restart");
        ensure!(self.widths.windows(2).all(|w| w[0] < w[1]), "widths must increase");
        Ok(())
    }

    fn exponents(&self) -> Vec<Rational> {
        self.grading.grades().to_vec()
    }

    fn target(&self, x: &[f64]) -> f64 {
        monomial_value(x, &self.exponents(), 1.0)
    }

    fn grid(&self, side: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.domain;
        let at = |i: usize| lo + (hi - lo) * i as f64 / (side - 1) as f64;
        (0..side).flat_map(|i| (0..side).map(move |j| vec![at(i), at(j)])).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    /// `graded_analytic`, `graded_trained` or `classical_relu`.
    pub model: &'static str,
    pub m: usize,
    pub train_max_err: f64,
    pub eval_max_err: f64,
    /// Restarts whose loss stopped being finite.
    pub diverged: usize,
    /// Which candidate won: `restart:<r>`, `warm_start` or `fixed`.
    pub selected: String,
}

#[derive(Debug, Clone)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn classical(&self) -> impl Iterator<Item = &BenchRow> {
        self.rows.iter().filter(|r| r.model == "classical_relu")
    }

    /// Smallest width whose held-out error is at most `eps`.
    pub fn neurons_to_reach(&self, model: &str, eps: f64) -> Option<usize> {
        self.rows.iter().filter(|r| r.model == model && r.eval_max_err <= eps).map(|r| r.m).min()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "model,m,train_max_err,eval_max_err,diverged,selected")?;
        for r in &self.rows {
            writeln!(
                f,
                "{},{},{},{},{},{}",
                r.model,
                r.m,
                fmt_f64(r.train_max_err),
                fmt_f64(r.eval_max_err),
                r.diverged,
                r.selected
            )?;
        }
        Ok(())
    }
}

/// Seed for one benchmark cell, mixed from the base seed and the cell label.
pub fn cell_seed(base: u64, cell: &str) -> u64 {
    // FNV-1a over the label, then a splitmix64 finalizer.
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ base;
    for b in cell.bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn max_err(f: impl Fn(&[f64]) -> f64, points: &[Vec<f64>], target: impl Fn(&[f64]) -> f64) -> f64 {
    points.iter().map(|x| (f(x) - target(x)).abs()).fold(0.0, |a, e| if e.is_nan() { f64::NAN } else { a.max(e) })
}

fn graded_neuron(cfg: &BenchConfig, weights: Vec<f64>) -> Result<Network> {
    let q = Arc::new(cfg.grading.clone());
    let head = MultiplicativeNeuron::new(weights, cfg.exponents(), 0.0, q.clone())?;
    Ok(Network::new(q, Vec::new(), Some(head))?)
}

fn graded_eval(net: &Network, x: &[f64]) -> f64 {
    let v = GradedVector::new(x.to_vec(), net.input_grading().clone()).expect("finite grid point");
    net.forward(&v).map(|y| y.values()[0]).unwrap_or(f64::NAN)
}

fn graded_rows(cfg: &BenchConfig, train_pts: &[Vec<f64>], eval_pts: &[Vec<f64>]) -> Result<Vec<BenchRow>> {
    let target = |x: &[f64]| cfg.target(x);
    let exact = graded_neuron(cfg, vec![1.0, 1.0])?;
    let analytic = BenchRow {
        model: "graded_analytic",
        m: 1,
        train_max_err: max_err(|x| graded_eval(&exact, x), train_pts, target),
        eval_max_err: max_err(|x| graded_eval(&exact, x), eval_pts, target),
        diverged: 0,
        selected: "fixed".into(),
    };

    let mut net = graded_neuron(cfg, vec![1.0, 1.0])?;
    let opt = OptimizerConfig { seed: cell_seed(cfg.seed, "graded/m=1"), ..cfg.graded.clone() };
    init_uniform(&mut net, opt.seed);
    let q = net.input_grading().clone();
    let out = net.output_grading().clone();
    let xs: Vec<GradedVector> = train_pts.iter().map(|x| GradedVector::new(x.clone(), q.clone())).collect::<graded::Result<_>>()?;
    let ys: Vec<GradedVector> =
        train_pts.iter().map(|x| GradedVector::new(vec![target(x)], out.clone())).collect::<graded::Result<_>>()?;
    let (trained, diverged) = match train(net.clone(), &xs, &ys, LossKind::GradedMse, &opt) {
        Ok(o) => (o.net, 0),
        Err(_) => (net, 1),
    };
    let learned = BenchRow {
        model: "graded_trained",
        m: 1,
        train_max_err: max_err(|x| graded_eval(&trained, x), train_pts, target),
        eval_max_err: max_err(|x| graded_eval(&trained, x), eval_pts, target),
        diverged,
        selected: "restart:0".into(),
    };
    Ok(vec![analytic, learned])
}

struct Candidate {
    mlp: ClassicalMlp,
    train_err: f64,
    label: String,
    diverged: bool,
}

fn train_candidate(cfg: &BenchConfig, mut mlp: ClassicalMlp, label: String, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Candidate {
    let history = mlp.train_gd(xs, ys, cfg.eta, cfg.momentum, cfg.iterations);
    let diverged = !history.last().is_some_and(|l| l.is_finite());
    let train_err = if diverged { f64::INFINITY } else { max_err(|x| mlp.forward(x)[0], xs, |x| cfg.target(x)) };
    Candidate { mlp, train_err: if train_err.is_nan() { f64::INFINITY } else { train_err }, label, diverged }
}

pub fn approx_bench(cfg: &BenchConfig) -> Result<BenchTable> {
    cfg.validate()?;
    let train_pts = cfg.grid(cfg.train_grid);
    let eval_pts = cfg.grid(cfg.eval_grid);
    let ys: Vec<Vec<f64>> = train_pts.iter().map(|x| vec![cfg.target(x)]).collect();

    let mut rows = graded_rows(cfg, &train_pts, &eval_pts)?;
    let mut previous: Option<ClassicalMlp> = None;
    for &m in &cfg.widths {
        let mut jobs: Vec<(ClassicalMlp, String)> = (0..cfg.restarts)
            .map(|r| {
                let seed = cell_seed(cfg.seed, &format!("classical/m={m}/restart={r}"));
                (ClassicalMlp::random(vec![2, m, 1], Hidden::Relu, seed), format!("restart:{r}"))
            })
            .collect();
        if let Some(prev) = &previous {
            jobs.push((prev.widen(m, cell_seed(cfg.seed, &format!("classical/m={m}/widen"))), "warm_start".into()));
        }
        let mut candidates: Vec<Candidate> =
            jobs.into_par_iter().map(|(mlp, label)| train_candidate(cfg, mlp, label, &train_pts, &ys)).collect();
        if let Some(prev) = &previous {
            // The untrained widened winner guarantees the training error never grows with m.
            let mlp = prev.widen(m, 0);
            let train_err = max_err(|x| mlp.forward(x)[0], &train_pts, |x| cfg.target(x));
            candidates.push(Candidate { mlp, train_err, label: "previous_width".into(), diverged: false });
        }
        let diverged = candidates.iter().filter(|c| c.diverged).count();
        let best = candidates
            .into_iter()
            .filter(|c| !c.diverged)
            .min_by(|a, b| a.train_err.total_cmp(&b.train_err))
            .context("every restart diverged")?;
        rows.push(BenchRow {
            model: "classical_relu",
            m,
            train_max_err: best.train_err,
            eval_max_err: max_err(|x| best.mlp.forward(x)[0], &eval_pts, |x| cfg.target(x)),
            diverged,
            selected: best.label,
        });
        previous = Some(best.mlp);
    }
    Ok(BenchTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_seeds_differ() {
        assert_ne!(cell_seed(0, "a"), cell_seed(0, "b"));
        assert_ne!(cell_seed(0, "a"), cell_seed(1, "a"));
        assert_eq!(cell_seed(7, "classical/m=4"), cell_seed(7, "classical/m=4"));
    }

    #[test]
    fn grid_covers_domain() {
        let cfg = BenchConfig::default();
        let g = cfg.grid(101);
        assert_eq!(g.len(), 101 * 101);
        assert_eq!(g[0], vec![0.01, 0.01]);
        assert_eq!(g[g.len() - 1], vec![1.0, 1.0]);
    }

    #[test]
    fn one_relu_cannot_fit_a_square() {
        // A single ReLU unit is linear on the part of [0, 1] where it is
        // active, and no such function is within 0.05 of x² everywhere.
        let xs: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0]).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * x[0]]).collect();
        let best = (0..5)
            .map(|s| {
                let mut mlp = ClassicalMlp::random(vec![1, 1, 1], Hidden::Relu, s);
                mlp.train_gd(&xs, &ys, 0.1, 0.9, 2000);
                xs.iter().map(|x| (mlp.forward(x)[0] - x[0] * x[0]).abs()).fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best >= 0.05, "{best}");
    }
}
