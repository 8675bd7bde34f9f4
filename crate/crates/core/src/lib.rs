//! Graded neural networks over graded vector spaces.
//!
//! Coordinates carry positive rational grades `q_i`, scalars act by
//! `λ ⋆ x = (λ^{q_i} x_i)`, and networks, losses and optimizers respect that
//! structure. With every grade equal to 1 the whole stack reduces to its
//! classical counterpart.
//!
//! ```
//! use std::sync::Arc;
//! use graded::{GradedVector, GradingVector};
//!
//! let q: Arc<GradingVector> = Arc::new("2,3".parse().unwrap());
//! let x = GradedVector::new(vec![1.0, 1.0], q).unwrap();
//! assert_eq!(x.scalar_action(2.0).unwrap().values(), &[4.0, 8.0]);
//! ```

pub mod error;
pub mod grad;
pub mod grading;
pub mod loss;
pub mod map;
pub mod nn;
pub mod opt;
pub mod vandermonde;
pub mod vector;

pub use error::{DegreeConflict, Error, Result};
pub use grad::{finite_diff_check, loss_grad, network_backward, GradientBundle};
pub use grading::{GradingVector, Rational, SignedGrading};
pub use loss::LossKind;
pub use map::GradedMatrix;
pub use nn::{ActivationKind, GradeBlock, Layer, MultiplicativeNeuron, Network};
pub use opt::{train, OptimizerConfig};
pub use vandermonde::vandermonde_project;
pub use vector::{GradedVector, NormScheme};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grading.md")]
    mod grading {}
    #[doc = include_str!("../../../book/src/norms.md")]
    mod norms {}
    #[doc = include_str!("../../../book/src/neurons.md")]
    mod neurons {}
    #[doc = include_str!("../../../book/src/losses.md")]
    mod losses {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    mod numerics {}
}
