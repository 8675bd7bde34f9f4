use crate::grading::Rational;
use thiserror::Error;

/// Errors produced by the graded toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Lengths or gradings that do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A linear system that cannot be solved as posed.
    #[error("ill-posed system: {0}")]
    IllPosed(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// Nonzero matrix entries imply more than one degree.
    #[error("inconsistent map degree: {0}")]
    DegreeConflict(DegreeConflict),

    /// A forward or loss evaluation left the representable range.
    #[error(
        "non-finite value at iteration {iteration} in {location}; \
         consider log-domain evaluation or smaller weights"
    )]
    NonFinite { iteration: usize, location: String },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Entries of a graded matrix grouped by the degree each one implies.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeConflict {
    pub groups: Vec<(Rational, Vec<(usize, usize)>)>,
}

impl std::fmt::Display for DegreeConflict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|(d, entries)| {
                let cells: Vec<String> =
                    entries.iter().map(|(i, j)| format!("({i},{j})")).collect();
                format!("d={d} at {}", cells.join(" "))
            })
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

pub(crate) fn shape_err(what: &str, expected: usize, found: usize) -> Error {
    Error::Shape(format!("{what}: expected {expected}, found {found}"))
}
