//! Re-evaluates the published worked examples through the library.
//!
//! Rows whose printed value disagrees with a direct evaluation of the stated
//! formula are reported as flagged, with the derived value shown next to the
//! printed one.

use std::fmt;
use std::sync::Arc;

use graded::loss::{graded_huber, graded_mse, graded_norm_loss, homogeneous_loss, max_graded_loss};
use graded::nn::{graded_exp, graded_relu, AdditiveNeuron, MultiplicativeNeuron};
use graded::{GradedVector, GradingVector, NormScheme, Rational};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Flagged,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub name: &'static str,
    pub computed: Vec<f64>,
    pub expected: Vec<f64>,
    pub tol: f64,
    pub status: Status,
    pub note: &'static str,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub rows: Vec<Row>,
}

impl Report {
    pub fn count(&self, status: Status) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    pub fn flagged(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.status == Status::Flagged).collect()
    }

    pub fn all_consistent(&self) -> bool {
        self.count(Status::Fail) == 0
    }

    fn check(&mut self, name: &'static str, computed: Vec<f64>, expected: Vec<f64>, tol: f64) {
        let ok = computed.len() == expected.len()
            && computed.iter().zip(&expected).all(|(c, e)| (c - e).abs() <= tol);
        let status = if ok { Status::Pass } else { Status::Fail };
        self.rows.push(Row { name, computed, expected, tol, status, note: "" });
    }

    /// A printed value that the formula does not reproduce. `derived` is the
    /// independent hand evaluation; the row fails if the library disagrees
    /// with it.
    fn flag(&mut self, name: &'static str, computed: Vec<f64>, derived: Vec<f64>, printed: Vec<f64>, note: &'static str) {
        let tol = 1e-3;
        let matches_derivation = computed.iter().zip(&derived).all(|(c, d)| (c - d).abs() <= tol);
        let status = if matches_derivation { Status::Flagged } else { Status::Fail };
        self.rows.push(Row { name, computed, expected: printed, tol, status, note });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let tag = match r.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Flagged => "FLAG",
            };
            write!(f, "{tag}  {:<34} computed {:?} expected {:?}", r.name, r.computed, r.expected)?;
            if !r.note.is_empty() {
                write!(f, "  [printed value inconsistent with its formula, derived value shown: {}]", r.note)?;
            }
            writeln!(f)?;
        }
        write!(
            f,
            "{} passed, {} failed, {} flagged",
            self.count(Status::Pass),
            self.count(Status::Fail),
            self.count(Status::Flagged)
        )
    }
}

fn grading(s: &str) -> Arc<GradingVector> {
    Arc::new(s.parse().expect("literal grading"))
}

fn vector(values: &[f64], q: &Arc<GradingVector>) -> GradedVector {
    GradedVector::new(values.to_vec(), q.clone()).expect("literal vector")
}

pub fn verify_examples() -> Report {
    let mut report = Report::default();
    let q = grading("2,2,2,3,3,3,3");

    let x = vector(&[2.0, -3.0, 1.0, 1.0, -2.0, 1.0, 1.0], &q);
    let relu = graded_relu(&x, false).into_values();
    let closed = vec![2f64.sqrt(), 3f64.sqrt(), 1.0, 1.0, 2f64.cbrt(), 1.0, 1.0];
    report.check("graded ReLU (closed form)", relu.clone(), closed, 1e-12);
    report.check("graded ReLU (printed)", relu, vec![1.414, 1.732, 1.0, 1.0, 1.260, 1.0, 1.0], 1e-3);

    let exp = graded_exp(&vector(&[2.0, -3.0], &grading("2,2"))).into_values();
    report.check("graded exponential", exp, vec![1f64.exp() - 1.0, (-1.5f64).exp() - 1.0], 1e-12);

    let x = vector(&[1.0, 0.0, 1.0, 1.0, -1.0, 0.0, 1.0], &q);
    report.check("graded Euclidean norm", vec![x.graded_euclidean_norm()], vec![13f64.sqrt()], 1e-12);
    report.check("max-graded norm", vec![x.max_graded_norm()], vec![3f64.sqrt()], 1e-12);

    let t = grading("1,2").tensor(&grading("3,4"));
    report.check("tensor grading", t.as_f64().to_vec(), vec![4.0, 5.0, 5.0, 6.0], 0.0);
    let t = grading("1/2,1/3").tensor(&grading("1/2,1/3"));
    let has_five_sixths = t.grades().contains(&Rational::new(5, 6));
    report.check("tensor grading, fractional", vec![f64::from(u8::from(has_five_sixths))], vec![1.0], 0.0);

    let ks: Vec<Rational> = [1, 0, 0, 2, 0, 0, 0].iter().map(|&k| Rational::from_integer(k)).collect();
    let beta = MultiplicativeNeuron::new(vec![1.0; 7], ks, 0.0, q.clone())
        .and_then(|n| n.forward(&vector(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0], &q)))
        .unwrap_or(f64::NAN);
    report.check("multiplicative neuron", vec![beta], vec![4.0], 1e-12);

    let y = vector(&[1.0, 0.0, 1.0, 1.0, -1.0, 0.0, 1.0], &q);
    let yhat = vector(&[0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0], &q);
    let hom = homogeneous_loss(&y, &yhat, NormScheme::ByDistinctCount).unwrap_or(f64::NAN);
    report.check("homogeneous loss", vec![hom], vec![12f64.sqrt()], 1e-12);
    report.check("max-graded loss", vec![max_graded_loss(&y, &yhat).unwrap_or(f64::NAN)], vec![3.0], 1e-12);
    report.flag(
        "graded MSE",
        vec![graded_mse(&y, &yhat).unwrap_or(f64::NAN)],
        vec![15.0 / 7.0],
        vec![13.0 / 7.0],
        "the printed terms 2+2+2+0+3+3+3 sum to 15, so MSE is 15/7",
    );
    report.flag(
        "graded norm loss",
        vec![graded_norm_loss(&y, &yhat).unwrap_or(f64::NAN)],
        vec![15.0],
        vec![13.0],
        "the printed terms 2+2+2+0+3+3+3 sum to 15",
    );
    report.flag(
        "graded Huber loss, delta = 1",
        vec![graded_huber(&y, &yhat, 1.0).unwrap_or(f64::NAN)],
        vec![7.5],
        vec![6.5],
        "every |z| is 0 or 1, so the sum is half of 15",
    );

    let n = AdditiveNeuron::new(vec![1.5], 0.0, grading("10")).expect("literal neuron");
    let one = vector(&[0.1], &grading("10"));
    let direct = n.forward(&one).unwrap_or(f64::NAN);
    let log = n.forward_log(&one).map(|l| l.ln_abs).unwrap_or(f64::NAN);
    report.flag(
        "large-grade magnitude and its log",
        vec![direct, log],
        vec![1.5f64.powi(10) * 0.1, 10.0 * 1.5f64.ln() + 0.1f64.ln()],
        vec![5.7e5, 4.05],
        "1.5^10 * 0.1 is about 5.77 and its log about 1.75",
    );

    let a = vector(&[1.0, -2.0, 0.0, 1.0, 0.0, 1.0, 1.0], &q);
    let b = vector(&[0.0, -1.0, 1.0, 1.0, -1.0, 0.0, 1.0], &q);
    let ra = graded_relu(&a, false);
    let rb = graded_relu(&b, false);
    let diff = |u: &GradedVector, v: &GradedVector| u.sub(v).map(|d| d.graded_euclidean_norm().powi(2));
    let out_sq = diff(&ra, &rb).unwrap_or(f64::NAN);
    let in_sq = diff(&a, &b).unwrap_or(f64::NAN);
    let root2 = 2f64.sqrt() - 1.0;
    report.flag(
        "activation stability norms",
        vec![out_sq, in_sq],
        vec![2.0 + 2.0 * root2 * root2 + 2.0 + 3.0 + 3.0, 12.0],
        vec![7.342, 10.0],
        "squared norms are 10.343 and 12",
    );
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_no_failures() {
        let r = verify_examples();
        assert!(r.all_consistent(), "{r}");
        assert_eq!(r.count(Status::Flagged), 5);
    }
}
