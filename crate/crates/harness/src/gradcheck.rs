//! Random graded networks checked against central finite differences.

use std::sync::Arc;

use graded::grad::finite_diff_check;
use graded::nn::{ActivationKind, Layer, MultiplicativeNeuron, Network};
use graded::{GradedVector, GradingVector, LossKind, NormScheme, Rational};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Grades drawn for random gradings.
const GRADES: [(i64, i64); 5] = [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1)];

/// Minimum distance from Huber thresholds and from ties in the max loss.
const KINK_MARGIN: f64 = 1e-3;

/// Largest prediction magnitude accepted. Central differences lose about
/// `L · 1e-16 / eps` to cancellation, which must stay well below the
/// tolerance for a loss of size `L`.
const OUTPUT_CAP: f64 = 50.0;

/// Root-type activations have curvature growing like `1/z²` near zero, so
/// pre-activations are kept at least this far from it.
const ROOT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct GradCase {
    pub net: Network,
    pub x: GradedVector,
    pub y: GradedVector,
    pub kind: LossKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub index: usize,
    pub layers: usize,
    pub head: bool,
    pub loss: String,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckSummary {
    pub eps: f64,
    pub tolerance: f64,
    pub cases: Vec<CaseResult>,
}

impl GradCheckSummary {
    pub fn worst(&self) -> f64 {
        self.cases.iter().map(|c| c.max_rel_err).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !(c.max_rel_err < self.tolerance)).count()
    }
}

fn random_grading(rng: &mut ChaCha8Rng, n: usize) -> Arc<GradingVector> {
    let grades = (0..n)
        .map(|_| {
            let (a, b) = GRADES[rng.gen_range(0..GRADES.len())];
            Rational::new(a, b)
        })
        .collect();
    Arc::new(GradingVector::new(grades).expect("positive grades"))
}

fn random_vector(rng: &mut ChaCha8Rng, q: &Arc<GradingVector>, lo: f64, hi: f64) -> GradedVector {
    GradedVector::new((0..q.len()).map(|_| rng.gen_range(lo..hi)).collect(), q.clone()).expect("finite")
}

fn all_losses() -> [LossKind; 7] {
    [
        LossKind::GradedMse,
        LossKind::GradedNorm,
        LossKind::GradedHuber { delta: 0.5 },
        LossKind::Homogeneous { scheme: NormScheme::ByDistinctCount },
        LossKind::Homogeneous { scheme: NormScheme::ByMaxGrade },
        LossKind::GradedCrossEntropy,
        LossKind::MaxGraded,
    ]
}

/// True when `ŷ` sits away from the points where `kind` is not smooth.
fn away_from_kinks(kind: LossKind, y: &GradedVector, yhat: &GradedVector) -> bool {
    let diff: Vec<f64> = yhat.values().iter().zip(y.values()).map(|(a, b)| a - b).collect();
    match kind {
        LossKind::GradedHuber { delta } => diff.iter().all(|d| (d.abs() - delta).abs() > KINK_MARGIN),
        LossKind::MaxGraded => {
            let mut s: Vec<f64> =
                diff.iter().zip(y.grading().as_f64()).map(|(d, q)| q.sqrt() * d.abs()).collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s[0] > KINK_MARGIN && (s.len() < 2 || s[0] - s[1] > KINK_MARGIN)
        }
        LossKind::Homogeneous { .. } => diff.iter().any(|d| d.abs() > KINK_MARGIN),
        _ => true,
    }
}

fn pre_activations_clear(net: &Network, x: &GradedVector) -> bool {
    let mut current = x.clone();
    for layer in net.layers() {
        let Ok(z) = layer.pre_activation(current.values()) else { return false };
        if layer.activation() != ActivationKind::Identity
            && layer.activation() != ActivationKind::GradedExp
            && z.iter().any(|v| v.abs() < ROOT_MARGIN)
        {
            return false;
        }
        let Ok(next) = layer.forward(&current) else { return false };
        current = next;
    }
    true
}

/// Up to three layers of width at most 8, random activations and gradings,
/// weights in `(0.2, 1.5)` and positive inputs, optionally a multiplicative
/// head. Targets are redrawn until the prediction avoids loss kinks.
pub fn random_case(rng: &mut ChaCha8Rng, kind: LossKind) -> GradCase {
    loop {
        let depth = rng.gen_range(1..=3);
        let head = rng.gen_bool(0.3);
        let n_in = rng.gen_range(1..=8);
        let input = random_grading(rng, n_in);
        let mut current = input.clone();
        let mut layers = Vec::with_capacity(depth);
        for _ in 0..depth {
            let width = rng.gen_range(1..=8);
            let mut out = random_grading(rng, width);
            if matches!(kind, LossKind::Homogeneous { scheme: NormScheme::ByMaxGrade }) && !head {
                let grades = (0..width).map(|_| Rational::from_integer(rng.gen_range(1..=3))).collect();
                out = Arc::new(GradingVector::new(grades).expect("positive"));
            }
            let act = *ActivationKind::ALL.choose(rng).expect("non-empty");
            let w = (0..width * current.len()).map(|_| rng.gen_range(0.2..1.5)).collect();
            let b = (0..width).map(|_| rng.gen_range(0.0..0.5)).collect();
            layers.push(Layer::new(w, b, act, current.clone(), out.clone()).expect("shapes agree"));
            current = out;
        }
        let head = head.then(|| {
            let k = (0..current.len())
                .map(|_| if rng.gen_bool(0.5) { Rational::from_integer(1) } else { Rational::new(1, 2) })
                .collect();
            let w = (0..current.len()).map(|_| rng.gen_range(0.2..1.5)).collect();
            MultiplicativeNeuron::new(w, k, rng.gen_range(0.0..0.5), current.clone()).expect("shapes agree")
        });
        let net = Network::new(input.clone(), layers, head).expect("chained gradings");
        let x = random_vector(rng, &input, 0.2, 1.0);
        if !pre_activations_clear(&net, &x) {
            continue;
        }
        let Ok(yhat) = net.forward(&x) else { continue };
        if !yhat.is_finite() || yhat.values().iter().any(|v| v.abs() > OUTPUT_CAP) {
            continue;
        }
        if matches!(kind, LossKind::Homogeneous { scheme: NormScheme::ByMaxGrade }) && !yhat.grading().is_integral() {
            continue;
        }
        let y = random_vector(rng, yhat.grading(), 0.0, 1.0);
        if away_from_kinks(kind, &y, &yhat) {
            return GradCase { net, x, y, kind };
        }
    }
}

/// Checks `count` random cases, cycling through every loss kind.
pub fn grad_check_suite(count: usize, eps: f64, seed: u64) -> graded::Result<GradCheckSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = all_losses();
    let mut cases = Vec::with_capacity(count);
    for index in 0..count {
        let case = random_case(&mut rng, kinds[index % kinds.len()]);
        let err = finite_diff_check(&case.net, &case.x, &case.y, case.kind, eps)?;
        cases.push(CaseResult {
            index,
            layers: case.net.layers().len(),
            head: case.net.head().is_some(),
            loss: case.kind.to_string(),
            max_rel_err: err,
        });
    }
    Ok(GradCheckSummary { eps, tolerance: 1e-5, cases })
}
