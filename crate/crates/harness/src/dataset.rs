//! Synthetic datasets and their CSV form.
//!
//! CSV files carry a header `x0,...,x{n-1},y0,...,y{m-1}`; floats are written
//! with 17 significant digits so a write/read cycle is lossless.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use graded::{GradedVector, GradingVector, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<GradedVector>,
    pub targets: Vec<GradedVector>,
    pub note: String,
}

impl Dataset {
    pub fn new(inputs: Vec<GradedVector>, targets: Vec<GradedVector>, note: impl Into<String>) -> Result<Self> {
        ensure!(!inputs.is_empty(), "dataset is empty");
        ensure!(inputs.len() == targets.len(), "{} inputs but {} targets", inputs.len(), targets.len());
        let (qi, qo) = (inputs[0].grading(), targets[0].grading());
        ensure!(inputs.iter().all(|x| x.grading() == qi), "inputs do not share one grading");
        ensure!(targets.iter().all(|y| y.grading() == qo), "targets do not share one grading");
        Ok(Dataset { inputs, targets, note: note.into() })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_grading(&self) -> &Arc<GradingVector> {
        self.inputs[0].grading()
    }

    pub fn output_grading(&self) -> &Arc<GradingVector> {
        self.targets[0].grading()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        let n = self.input_grading().len();
        let m = self.output_grading().len();
        let header: Vec<String> = (0..n).map(|i| format!("x{i}")).chain((0..m).map(|j| format!("y{j}"))).collect();
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            w.write_record(x.values().iter().chain(y.values()).map(|v| fmt_f64(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV whose columns must match the two gradings exactly.
    pub fn read_csv(path: &Path, input: Arc<GradingVector>, output: Arc<GradingVector>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let (n, m) = (input.len(), output.len());
        let header = r.headers()?.clone();
        let expected: Vec<String> = (0..n).map(|i| format!("x{i}")).chain((0..m).map(|j| format!("y{j}"))).collect();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            bail!(
                "{}: header {:?} does not match gradings {input} / {output}; expected {:?}",
                path.display(),
                header.iter().collect::<Vec<_>>(),
                expected
            );
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let values: Vec<f64> = record
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("{} row {}", path.display(), row + 1))?;
            inputs.push(GradedVector::new(values[..n].to_vec(), input.clone())?);
            targets.push(GradedVector::new(values[n..].to_vec(), output.clone())?);
        }
        Dataset::new(inputs, targets, format!("csv:{}", path.display()))
    }
}

/// Grading `(Σ q_i k_i)`, or `(1)` when that sum is zero.
pub fn degree_grading(q: &GradingVector, exponents: &[Rational]) -> Arc<GradingVector> {
    let d: Rational = q.grades().iter().zip(exponents).map(|(q, k)| q * k).sum();
    let d = if d > Rational::from_integer(0) { d } else { Rational::from_integer(1) };
    Arc::new(GradingVector::new(vec![d]).expect("positive"))
}

/// `c Π |x_i|^{k_i} sgn(x_i^{k_i})`, evaluated directly.
pub fn monomial_value(x: &[f64], exponents: &[Rational], coefficient: f64) -> f64 {
    let mut out = coefficient;
    for (xi, k) in x.iter().zip(exponents) {
        if *k == Rational::from_integer(0) {
            continue;
        }
        let kf = *k.numer() as f64 / *k.denom() as f64;
        let sign = if k.is_integer() && k.numer() % 2 != 0 { xi.signum() } else { 1.0 };
        out *= sign * xi.abs().powf(kf);
    }
    out
}

fn check_box(domain: &[(f64, f64)], n: usize, exponents: Option<&[Rational]>) -> Result<()> {
    ensure!(domain.len() == n, "domain box has {} intervals for {n} inputs", domain.len());
    for (i, (lo, hi)) in domain.iter().enumerate() {
        ensure!(lo.is_finite() && hi.is_finite() && lo < hi, "invalid interval {i}: [{lo}, {hi}]");
        if let Some(k) = exponents {
            if !k[i].is_integer() && *lo <= 0.0 {
                bail!("non-integer exponent {} needs a positive interval, got [{lo}, {hi}]", k[i]);
            }
        }
    }
    Ok(())
}

fn sample(rng: &mut ChaCha8Rng, domain: &[(f64, f64)]) -> Vec<f64> {
    domain.iter().map(|(lo, hi)| rng.gen_range(*lo..*hi)).collect()
}

pub fn gen_monomial_dataset(
    grading: Arc<GradingVector>,
    exponents: &[Rational],
    coefficient: f64,
    domain: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    ensure!(exponents.len() == grading.len(), "{} exponents for {} inputs", exponents.len(), grading.len());
    check_box(domain, grading.len(), Some(exponents))?;
    let out = degree_grading(&grading, exponents);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for _ in 0..count {
        let x = sample(&mut rng, domain);
        targets.push(GradedVector::new(vec![monomial_value(&x, exponents, coefficient)], out.clone())?);
        inputs.push(GradedVector::new(x, grading.clone())?);
    }
    Dataset::new(inputs, targets, format!("monomial c={coefficient} seed={seed}"))
}

/// Targets `y = Σ sgn(a_i)|a_i|^{q_i} x_i + b` from a hidden teacher drawn
/// with the same seed. A one-layer identity model can fit them exactly.
pub fn gen_graded_linear_dataset(
    grading: Arc<GradingVector>,
    domain: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    check_box(domain, grading.len(), None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher: Vec<f64> = (0..grading.len()).map(|_| rng.gen_range(0.5..1.0)).collect();
    let bias = rng.gen_range(-0.5..0.5);
    let out = Arc::new(GradingVector::ones(1));
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for _ in 0..count {
        let x = sample(&mut rng, domain);
        let y: f64 = teacher
            .iter()
            .zip(grading.as_f64())
            .zip(&x)
            .map(|((a, q), xi)| a.signum() * a.abs().powf(*q) * xi)
            .sum::<f64>()
            + bias;
        targets.push(GradedVector::new(vec![y], out.clone())?);
        inputs.push(GradedVector::new(x, grading.clone())?);
    }
    Dataset::new(inputs, targets, format!("graded_linear seed={seed}"))
}

/// Integer exponent vectors `k ≥ 0` with `Σ q_i k_i = degree`.
pub fn weighted_monomials(grading: &GradingVector, degree: Rational) -> Vec<Vec<Rational>> {
    fn walk(q: &[Rational], left: Rational, prefix: &mut Vec<Rational>, out: &mut Vec<Vec<Rational>>) {
        match q.split_first() {
            None => {
                if left == Rational::from_integer(0) {
                    out.push(prefix.clone());
                }
            }
            Some((first, rest)) => {
                let mut k = Rational::from_integer(0);
                while k * first <= left {
                    prefix.push(k);
                    walk(rest, left - k * first, prefix, out);
                    prefix.pop();
                    k += Rational::from_integer(1);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(grading.grades(), degree, &mut Vec::new(), &mut out);
    out
}

/// Random combinations of monomials of one weighted degree, so every target
/// is graded-homogeneous. Output grading is `(degree)`.
pub fn gen_homogeneous_polynomial_dataset(
    grading: Arc<GradingVector>,
    degree: Rational,
    terms: usize,
    domain: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Result<Dataset> {
    check_box(domain, grading.len(), None)?;
    ensure!(degree > Rational::from_integer(0), "degree must be positive");
    let all = weighted_monomials(&grading, degree);
    ensure!(!all.is_empty(), "no monomial of degree {degree} exists for grading {grading}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<(Vec<Rational>, f64)> = (0..terms.max(1))
        .map(|_| (all[rng.gen_range(0..all.len())].clone(), rng.gen_range(-1.0..1.0)))
        .collect();
    let out = Arc::new(GradingVector::new(vec![degree])?);
    let mut inputs = Vec::with_capacity(count);
    let mut targets = Vec::with_capacity(count);
    for _ in 0..count {
        let x = sample(&mut rng, domain);
        let y = chosen.iter().map(|(k, c)| monomial_value(&x, k, *c)).sum();
        targets.push(GradedVector::new(vec![y], out.clone())?);
        inputs.push(GradedVector::new(x, grading.clone())?);
    }
    Dataset::new(inputs, targets, format!("homogeneous_polynomial degree={degree} seed={seed}"))
}
