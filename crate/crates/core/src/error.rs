use alloc::string::String;
use core::fmt;

use crate::params::GroupId;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid dimensions or horizon outside their admissible range.
    InvalidGrid(String),
    /// A model or solver parameter outside its admissible range.
    InvalidParameter { name: String, value: f64, reason: &'static str },
    /// A density/value row whose length does not match the grid.
    ShapeMismatch { what: &'static str, expected: usize, found: usize },
    /// The chained period needs the final state of its predecessor.
    MissingPredecessor,
    /// `h² ≤ 4τσ²` does not hold, so the diffusion matrix is not an M-matrix.
    DiffusionCfl { group: GroupId, h_squared: f64, bound: f64 },
    /// `τ|α| ≤ h/4` does not hold at the given node.
    AdvectionCfl { group: GroupId, step: usize, node: usize, alpha: f64, limit: f64 },
    /// A density fell below the non-negativity floor.
    NegativeDensity { group: GroupId, step: usize, cell: usize, value: f64 },
    /// A NaN or infinity showed up in the named quantity.
    NonFinite { what: &'static str, group: Option<GroupId>, step: usize, cell: usize },
    /// Zero pivot during tridiagonal elimination.
    SingularSystem { row: usize },
    /// The objective grew more than tenfold over ten consecutive iterations.
    Diverged { iteration: usize, growth: f64 },
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name: name.into(), value, reason }
    }

    /// Validation errors are problems with the input; everything else is a
    /// numerical failure during a run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidParameter { .. }
                | Error::ShapeMismatch { .. }
                | Error::MissingPredecessor
                | Error::DiffusionCfl { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidParameter { name, value, reason } => {
                write!(f, "{name} = {value}: {reason}")
            }
            Error::ShapeMismatch { what, expected, found } => {
                write!(f, "{what}: expected {expected} entries, found {found}")
            }
            Error::MissingPredecessor => write!(
                f,
                "this period starts from the final state of the previous one; supply it (--init-from)"
            ),
            Error::DiffusionCfl { group, h_squared, bound } => write!(
                f,
                "group {group}: h^2 = {h_squared} exceeds 4*tau*sigma^2 = {bound}; refine N or raise sigma^2"
            ),
            Error::AdvectionCfl { group, step, node, alpha, limit } => write!(
                f,
                "group {group}, step {step}, node {node}: |alpha| = {} exceeds h/(4 tau) = {limit}; increase M",
                alpha.abs()
            ),
            Error::NegativeDensity { group, step, cell, value } => {
                write!(f, "group {group}, step {step}, cell {cell}: density {value} is negative")
            }
            Error::NonFinite { what, group, step, cell } => match group {
                Some(g) => write!(f, "non-finite {what} at group {g}, step {step}, cell {cell}"),
                None => write!(f, "non-finite {what} at step {step}, cell {cell}"),
            },
            Error::SingularSystem { row } => {
                write!(f, "zero pivot in tridiagonal elimination at row {row}")
            }
            Error::Diverged { iteration, growth } => write!(
                f,
                "objective grew {growth:.3e}x over the last 10 iterations (iteration {iteration}); try a relaxation factor below 1"
            ),
        }
    }
}

impl core::error::Error for Error {}
