//! One line per acceptance criterion. Runs as a plain binary so the lines
//! show up in `cargo test` output; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{ensure, Result};
use graded::grad::DEFAULT_EPS;
use graded::nn::{graded_relu, ActivationKind, AdditiveNeuron, Layer, MultiplicativeNeuron, Network};
use graded::opt::{init_uniform, lipschitz_estimate, train, train_with, OptimizerConfig};
use graded::{vandermonde_project, GradedVector, GradingVector, LossKind, Rational};
use graded_harness::bench::{approx_bench, BenchConfig};
use graded_harness::gradcheck::grad_check_suite;
use graded_harness::mlp::{ClassicalMlp, Hidden};
use graded_harness::verify::{verify_examples, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRADES: [(i64, i64); 6] = [(1, 2), (1, 1), (3, 2), (2, 1), (3, 1), (5, 1)];

fn random_grading(rng: &mut ChaCha8Rng, n: usize, distinct: usize) -> Arc<GradingVector> {
    let pool = &GRADES[..distinct.min(GRADES.len())];
    let grades = (0..n)
        .map(|_| {
            let (a, b) = pool[rng.gen_range(0..pool.len())];
            Rational::new(a, b)
        })
        .collect();
    Arc::new(GradingVector::new(grades).expect("positive"))
}

fn random_vector(rng: &mut ChaCha8Rng, q: &Arc<GradingVector>, lo: f64, hi: f64) -> GradedVector {
    GradedVector::new((0..q.len()).map(|_| rng.gen_range(lo..hi)).collect(), q.clone()).expect("finite")
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn worked_examples() -> Result<String> {
    let start = Instant::now();
    let report = verify_examples();
    let elapsed = start.elapsed();
    ensure!(report.all_consistent(), "verify-examples reported failures:\n{report}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    let passed = report.count(Status::Pass);
    Ok(format!(
        "{passed} rows pass in {elapsed:.1?}; MSE and norm rows evaluate to the derived 15/7 and 15, see criterion 2"
    ))
}

fn documented_flags() -> Result<String> {
    let report = verify_examples();
    let flagged: Vec<&str> = report.flagged().iter().map(|r| r.name).collect();
    for needed in ["graded Huber loss, delta = 1", "large-grade magnitude and its log", "activation stability norms"] {
        ensure!(flagged.contains(&needed), "missing flag {needed:?}; flagged: {flagged:?}");
    }
    let extra: Vec<&&str> = flagged
        .iter()
        .filter(|n| !["graded Huber loss, delta = 1", "large-grade magnitude and its log", "activation stability norms"].contains(n))
        .collect();
    ensure!(report.count(Status::Fail) == 0, "some rows fail");
    Ok(format!(
        "3 documented flags present; {} further flags {:?}, where the printed 13/7 and 13 contradict their own term lists",
        extra.len(),
        extra
    ))
}

fn monomial_exactness() -> Result<String> {
    let q: Arc<GradingVector> = Arc::new("2,2,2,3,3,3,3".parse()?);
    let k: Vec<Rational> = [1, 0, 0, 2, 0, 0, 0].iter().map(|&v| Rational::from_integer(v)).collect();
    let neuron = MultiplicativeNeuron::for_monomial(k, 1.0, q.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let x = random_vector(&mut rng, &q, 0.1, 2.0);
        let v = x.values();
        worst = worst.max((neuron.forward(&x)? - v[0] * v[3] * v[3]).abs());
    }
    ensure!(worst < 1e-12, "max error {worst:e}");
    Ok(format!("max abs error {worst:.2e} over 1000 points"))
}

fn homogeneity() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for trial in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let q = random_grading(&mut rng, n, 6);
        let x = random_vector(&mut rng, &q, -3.0, 3.0);
        let (l, m) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));

        let twice = x.scalar_action(m)?.scalar_action(l)?;
        let once = x.scalar_action(l * m)?;
        for (a, b) in twice.values().iter().zip(once.values()) {
            ensure!(rel_close(*a, *b, 1e-9), "scalar action, trial {trial}: {a} vs {b}");
        }

        let base = graded_relu(&x, false);
        let scaled = graded_relu(&x.scalar_action(l)?, false);
        for ((a, b), xi) in base.values().iter().zip(scaled.values()).zip(x.values()) {
            if xi.abs() > 1e-6 {
                ensure!(rel_close(l * a, *b, 1e-9), "graded ReLU, trial {trial}: {} vs {b}", l * a);
            }
        }

        let k: Vec<Rational> = (0..n).map(|_| Rational::from_integer(rng.gen_range(0..4))).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..1.5)).collect();
        let neuron = MultiplicativeNeuron::new(w, k, 0.0, q.clone())?;
        let d = neuron.degree();
        let d = *d.numer() as f64 / *d.denom() as f64;
        let xp = random_vector(&mut rng, &q, 0.1, 2.0);
        let lhs = neuron.forward(&xp.scalar_action(l)?)?;
        let rhs = l.powf(d) * neuron.forward(&xp)?;
        ensure!(rel_close(lhs, rhs, 1e-9), "multiplicative neuron, trial {trial}: {lhs} vs {rhs}");
    }
    Ok("3 × 10^4 trials within rel 1e-9".into())
}

fn gradients() -> Result<String> {
    let start = Instant::now();
    let summary = grad_check_suite(100, DEFAULT_EPS, 0)?;
    let elapsed = start.elapsed();
    ensure!(summary.failures() == 0, "{} of 100 networks exceed 1e-5, worst {:e}", summary.failures(), summary.worst());
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!("100 networks, worst rel err {:.2e}, {elapsed:.1?}", summary.worst()))
}

fn convexity() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..10_000 {
        let n = rng.gen_range(1..=8);
        let q = random_grading(&mut rng, n, 6);
        let y = random_vector(&mut rng, &q, -3.0, 3.0);
        let a = random_vector(&mut rng, &q, -3.0, 3.0);
        let b = random_vector(&mut rng, &q, -3.0, 3.0);
        let mid = GradedVector::new(a.values().iter().zip(b.values()).map(|(u, v)| 0.5 * (u + v)).collect(), q.clone())?;
        for kind in [LossKind::GradedNorm, LossKind::MaxGraded] {
            let lm = kind.evaluate(&y, &mid)?;
            let avg = 0.5 * (kind.evaluate(&y, &a)? + kind.evaluate(&y, &b)?);
            ensure!(lm <= avg + 1e-12, "{kind}, trial {trial}: L(mid) = {lm} > {avg}");
        }
    }
    Ok("10^4 triples, no violations".into())
}

fn reduction() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for net_index in 0..100 {
        let depth = rng.gen_range(1..=3);
        let mut widths = vec![rng.gen_range(1..=6)];
        widths.extend((0..depth - 1).map(|_| rng.gen_range(1..=6)));
        widths.push(1);
        let hidden = if net_index % 2 == 0 { Hidden::Relu } else { Hidden::ExpM1 };
        let mlp = ClassicalMlp::random(widths.clone(), hidden, rng.gen());
        let net = mlp.to_graded()?;
        let q = net.input_grading().clone();
        for _ in 0..10 {
            let x: Vec<f64> = (0..widths[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let a = mlp.forward(&x)[0];
            let b = net.forward(&GradedVector::new(x, q.clone())?)?.values()[0];
            ensure!(rel_close(a, b, 1e-10), "forward, net {net_index}: {a} vs {b}");
            worst = worst.max((a - b).abs() / a.abs().max(1e-300));
        }
    }

    // Training trajectories: full-batch descent on mean squared error.
    let widths = vec![3, 5, 4, 1];
    for (seed, hidden, momentum) in [(1, Hidden::Relu, 0.0), (2, Hidden::ExpM1, 0.0), (3, Hidden::Relu, 0.5)] {
        let mut mlp = ClassicalMlp::random(widths.clone(), hidden, seed);
        let net = mlp.to_graded()?;
        let q_in = net.input_grading().clone();
        let q_out = net.output_grading().clone();
        let mut data_rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let xs: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| data_rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * x[1] - 0.5 * x[2]]).collect();
        let gx: Vec<GradedVector> = xs.iter().map(|x| GradedVector::new(x.clone(), q_in.clone())).collect::<graded::Result<_>>()?;
        let gy: Vec<GradedVector> = ys.iter().map(|y| GradedVector::new(y.clone(), q_out.clone())).collect::<graded::Result<_>>()?;
        let classical = mlp.train_gd(&xs, &ys, 0.01, momentum, 50);
        let cfg = OptimizerConfig { eta: 0.01, momentum, max_iter: 50, ..Default::default() };
        let graded_losses = train(net, &gx, &gy, LossKind::GradedMse, &cfg)?.losses();
        ensure!(classical.len() == graded_losses.len(), "trajectory lengths differ");
        for (t, (a, b)) in classical.iter().zip(&graded_losses).enumerate() {
            ensure!(rel_close(*a, *b, 1e-10), "trajectory {seed}, step {t}: {a} vs {b}");
            worst = worst.max((a - b).abs() / a.abs());
        }
    }
    Ok(format!("100 nets × 10 inputs and 3 × 50-step trajectories, worst rel diff {worst:.2e}"))
}

fn convex_descent() -> Result<String> {
    let q_in: Arc<GradingVector> = Arc::new("1,1,1".parse()?);
    let q_out: Arc<GradingVector> = Arc::new("2,2,3,3".parse()?);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let teacher_w: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let teacher_b: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let teacher = Layer::new(teacher_w, teacher_b, ActivationKind::Identity, q_in.clone(), q_out.clone())?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for _ in 0..40 {
        let x = random_vector(&mut rng, &q_in, -1.0, 1.0);
        ys.push(teacher.forward(&x)?);
        xs.push(x);
    }
    let student = Layer::new(vec![0.0; 12], vec![0.0; 4], ActivationKind::Identity, q_in.clone(), q_out)?;
    let mut net = Network::new(q_in, vec![student], None)?;
    init_uniform(&mut net, 8);
    let eta = 0.01;
    ensure!(eta < 1.0 / lipschitz_estimate(3.0, 4.0), "step size above 1/Λ");
    let cfg = OptimizerConfig { eta, max_iter: 1000, ..Default::default() };
    let mut records = 0;
    let losses = train_with(net, &xs, &ys, LossKind::GradedNorm, &cfg, |_| records += 1)?.losses();
    ensure!(records == 1001, "expected 1001 records, got {records}");
    ensure!(losses.windows(2).all(|w| w[1] <= w[0]), "loss increased");
    let ratio = losses[1000] / losses[0];
    ensure!(ratio < 1e-3, "final/initial = {ratio:e}");
    let envelope = (10..=1000).map(|t| t as f64 * losses[t]).fold(0.0, f64::max);
    ensure!(envelope < 100.0 * losses[0], "t·L_t reaches {envelope}");
    Ok(format!("monotone, final/initial {ratio:.2e}, max t·L_t {envelope:.3}"))
}

fn vandermonde() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..2000 {
        let n = rng.gen_range(1..=8);
        let q = random_grading(&mut rng, n, 4);
        let x = random_vector(&mut rng, &q, -3.0, 3.0);
        let distinct = q.distinct();
        let lambdas: Vec<f64> = (0..distinct.len()).map(|k| 1.0 + 0.5 * k as f64).collect();
        for d in distinct {
            let p = vandermonde_project(&x, d, &lambdas)?;
            for (a, b) in p.component.values().iter().zip(x.component(d).values()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    ensure!(worst < 1e-8, "max deviation {worst:e}");
    Ok(format!("2000 vectors with at most 4 distinct grades, max deviation {worst:.2e}"))
}

fn log_domain() -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q: Arc<GradingVector> = Arc::new("2,3,1/2,5".parse()?);
    for _ in 0..1000 {
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(0.2..1.5)).collect();
        let n = AdditiveNeuron::new(w, rng.gen_range(0.0..1.0), q.clone())?;
        let x = random_vector(&mut rng, &q, 0.1, 2.0);
        let direct = n.forward(&x)?;
        let logged = n.forward_log(&x)?.to_f64().unwrap_or(f64::NAN);
        ensure!(rel_close(direct, logged, 1e-12), "{direct} vs {logged}");
    }
    let q: Arc<GradingVector> = Arc::new("100".parse()?);
    let big = MultiplicativeNeuron::new(vec![1e4], vec![Rational::from_integer(100)], 0.0, q.clone())?;
    let x = GradedVector::new(vec![1e4], q)?;
    ensure!(big.forward(&x)?.is_infinite(), "direct value should overflow");
    let l = big.forward_log(&x)?;
    ensure!(l.sign == 1.0 && l.ln_abs.is_finite(), "log value {l:?}");
    Ok(format!("1000 neurons within rel 1e-12; overflowing case gives ln|y| = {:.3}", l.ln_abs))
}

fn approximation() -> Result<String> {
    let start = Instant::now();
    let table = approx_bench(&BenchConfig::default())?;
    let elapsed = start.elapsed();
    let gnn = table.neurons_to_reach("graded_trained", 1e-9);
    ensure!(gnn == Some(1), "trained graded neuron misses 1e-9: {:?}", table.rows);
    ensure!(table.neurons_to_reach("graded_analytic", 1e-9) == Some(1), "analytic graded neuron misses 1e-9");
    let classical: Vec<f64> = table.classical().map(|r| r.eval_max_err).collect();
    ensure!(classical.windows(2).all(|w| w[1] <= w[0]), "classical error grows with m: {classical:?}");
    let reach = table.neurons_to_reach("classical_relu", 1e-2);
    ensure!(reach.is_none_or(|m| m > 1), "one ReLU unit reached 1e-2");
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    let reach = reach.map_or("none up to m = 32".to_string(), |m| format!("m = {m}"));
    let errs: Vec<String> = classical.iter().map(|e| format!("{e:.3}")).collect();
    Ok(format!("graded m = 1 reaches 1e-9; classical errors [{}], 1e-2 reached at {reach}; {elapsed:.0?}", errs.join(", ")))
}

fn not_reproducible() -> Result<String> {
    Ok("not reproduced here: genus-2 classification accuracy, the quantum MSE comparison, Sobolev/Besov rate \
        constants and photonic throughput need external data or hardware; criterion 11 covers the qualitative claim"
        .into())
}

type Check = fn() -> Result<String>;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        ("worked examples", worked_examples),
        ("documented inconsistencies flagged", documented_flags),
        ("monomial exactness", monomial_exactness),
        ("homogeneity properties", homogeneity),
        ("gradient correctness", gradients),
        ("convexity of norm and max losses", convexity),
        ("reduction to classical networks", reduction),
        ("grade-adaptive descent on a convex problem", convex_descent),
        ("Vandermonde projection", vandermonde),
        ("log-domain evaluation", log_domain),
        ("approximation advantage", approximation),
        ("out-of-scope claims", not_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {e:#}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
