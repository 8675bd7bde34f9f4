use std::sync::Arc;

use graded::grad::{loss_grad, network_backward};
use graded::nn::{ActivationKind, AdditiveNeuron, Layer, LogValue, MultiplicativeNeuron, Network};
use graded::opt::{init_uniform, lipschitz_estimate, train, OptimizerConfig};
use graded::{GradedVector, GradingVector, LossKind, NormScheme, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn g(s: &str) -> Arc<GradingVector> {
    Arc::new(s.parse().unwrap())
}

fn v(values: &[f64], q: &Arc<GradingVector>) -> GradedVector {
    GradedVector::new(values.to_vec(), q.clone()).unwrap()
}

/// Linear-in-parameters problem: unit input grades, graded outputs, and a
/// teacher that the model can represent exactly.
fn convex_problem(seed: u64) -> (Network, Vec<GradedVector>, Vec<GradedVector>) {
    let q_in = g("1,1,1");
    let q_out = g("2,2,3,3");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher_w: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let teacher_b: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let teacher =
        Layer::new(teacher_w, teacher_b, ActivationKind::Identity, q_in.clone(), q_out.clone()).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..40 {
        let x = v(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], &q_in);
        ys.push(teacher.forward(&x).unwrap());
        xs.push(x);
    }
    let student = Layer::new(vec![0.0; 12], vec![0.0; 4], ActivationKind::Identity, q_in.clone(), q_out).unwrap();
    let mut net = Network::new(q_in, vec![student], None).unwrap();
    init_uniform(&mut net, seed);
    (net, xs, ys)
}

#[test]
fn convex_problem_descends_monotonically() {
    let (net, xs, ys) = convex_problem(11);
    // ‖(x, 1)‖² ≤ 4 on this box.
    let lambda = lipschitz_estimate(3.0, 4.0);
    let eta = 0.01;
    assert!(eta < 1.0 / lambda);
    let cfg = OptimizerConfig { eta, max_iter: 1000, ..Default::default() };
    let out = train(net, &xs, &ys, LossKind::GradedNorm, &cfg).unwrap();
    let losses = out.losses();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]), "loss increased");
    assert!(losses[1000] / losses[0] < 1e-3, "{} -> {}", losses[0], losses[1000]);
    // The optimum is zero, so t · L_t must stay bounded.
    let envelope = (10..=1000).map(|t| t as f64 * losses[t]).fold(0.0, f64::max);
    assert!(envelope < 100.0 * losses[0]);
}

#[test]
fn training_is_bit_reproducible() {
    let run = || {
        let (net, xs, ys) = convex_problem(5);
        let cfg = OptimizerConfig { eta: 0.01, momentum: 0.5, max_iter: 200, ..Default::default() };
        train(net, &xs, &ys, LossKind::GradedNorm, &cfg).unwrap().losses()
    };
    let a: Vec<u64> = run().iter().map(|l| l.to_bits()).collect();
    let b: Vec<u64> = run().iter().map(|l| l.to_bits()).collect();
    assert_eq!(a, b);
}

#[test]
fn block_layer_example_reaches_small_loss() {
    // Unit weights inside grade blocks, x = y = e_0 + e_3. Initial loss is 13.
    let q = g("2,2,2,3,3,3,3");
    let mut w = vec![0.0; 49];
    for j in 0..7 {
        for i in 0..7 {
            if q.grade(i) == q.grade(j) {
                w[j * 7 + i] = 1.0;
            }
        }
    }
    let layer = Layer::new(w, vec![0.0; 7], ActivationKind::Identity, q.clone(), q.clone())
        .unwrap()
        .with_blocks(Layer::grade_blocks_for(&q, &q))
        .unwrap();
    let net = Network::new(q.clone(), vec![layer], None).unwrap();
    let x = v(&[1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0], &q);
    let cfg = OptimizerConfig { eta: 0.01, max_iter: 1000, target_loss: Some(0.02), ..Default::default() };
    let out = train(net, &[x.clone()], &[x], LossKind::GradedNorm, &cfg).unwrap();
    assert_eq!(out.history[0].loss, 13.0);
    assert!(out.final_loss() < 0.02, "final {}", out.final_loss());
    assert!(out.history.len() <= 1001);
}

#[test]
fn max_graded_gradient_is_a_subgradient() {
    let q = g("1,2,3,1/2");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y = v(&[0.2, -0.4, 0.9, 1.5], &q);
    let yhat = v(&[1.0, 0.3, 0.1, -0.2], &q);
    let l0 = LossKind::MaxGraded.evaluate(&y, &yhat).unwrap();
    let gr = loss_grad(LossKind::MaxGraded, &y, &yhat).unwrap();
    for _ in 0..1000 {
        let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let lz = LossKind::MaxGraded.evaluate(&y, &v(&z, &q)).unwrap();
        let lin: f64 = gr.values().iter().zip(&z).zip(yhat.values()).map(|((g, z), p)| g * (z - p)).sum();
        assert!(lz >= l0 + lin - 1e-12);
    }
}

#[test]
fn homogeneous_gradient_matches_directional_derivative() {
    let q = g("1,1,2,3");
    let y = v(&[0.5, -0.2, 0.3, 1.0], &q);
    let yhat = v(&[0.1, 0.4, -0.6, 0.2], &q);
    let dir = [0.3, -0.7, 0.2, 0.5];
    for scheme in [NormScheme::ByDistinctCount, NormScheme::ByMaxGrade] {
        let kind = LossKind::Homogeneous { scheme };
        let gr = loss_grad(kind, &y, &yhat).unwrap();
        let t = 1e-6;
        let moved: Vec<f64> = yhat.values().iter().zip(&dir).map(|(p, d)| p + t * d).collect();
        let fd = (kind.evaluate(&y, &v(&moved, &q)).unwrap() - kind.evaluate(&y, &yhat).unwrap()) / t;
        let an: f64 = gr.values().iter().zip(&dir).map(|(g, d)| g * d).sum();
        assert!((fd - an).abs() / an.abs() < 1e-4, "{scheme}: {fd} vs {an}");
    }
}

#[test]
fn log_domain_matches_direct_and_survives_overflow() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = g("2,3,1/2,5");
    for _ in 0..1000 {
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..1.5)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..2.0)).collect();
        let n = AdditiveNeuron::new(w, rng.gen_range(0.0..1.0), q.clone()).unwrap();
        let xv = v(&x, &q);
        let direct = n.forward(&xv).unwrap();
        let logged = n.forward_log(&xv).unwrap().to_f64().unwrap();
        assert!((direct - logged).abs() <= 1e-12 * direct.abs());
    }
    let q = g("100");
    let big = MultiplicativeNeuron::new(vec![1e4], vec![Rational::from_integer(100)], 0.0, q.clone()).unwrap();
    let x = v(&[1e4], &q);
    assert!(big.forward(&x).unwrap().is_infinite());
    let l: LogValue = big.forward_log(&x).unwrap();
    assert_eq!(l.sign, 1.0);
    assert!((l.ln_abs - 200.0 * 1e4f64.ln()).abs() < 1e-9);
}

#[test]
fn backward_shapes_match_network() {
    let q = g("1,2");
    let l1 = Layer::new(vec![0.5; 6], vec![0.1; 3], ActivationKind::GradedExp, q.clone(), g("1,1,2")).unwrap();
    let l2 = Layer::new(vec![0.4; 6], vec![0.0; 2], ActivationKind::Identity, g("1,1,2"), q.clone()).unwrap();
    let net = Network::new(q.clone(), vec![l1, l2], None).unwrap();
    let b = network_backward(&net, &v(&[0.3, 0.6], &q), &v(&[0.0, 1.0], &q), LossKind::GradedMse).unwrap();
    assert_eq!(b.layers[0].weight_base.len(), 6);
    assert_eq!(b.layers[1].bias.len(), 2);
    assert_eq!(b.flatten().len(), net.parameter_count());
}
