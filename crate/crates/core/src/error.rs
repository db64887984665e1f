use thiserror::Error;

/// Errors raised by the meshing, assembly, recovery and estimation stages.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("projection onto the interface did not converge from ({x}, {y}): |phi| = {residual:e}")]
    NoConvergence { x: f64, y: f64, residual: f64 },

    #[error("interface is not resolved by the background mesh ({0}); increase n_per_side")]
    UnresolvedInterface(String),

    #[error("triangle {0} has non-interface vertices on both sides of the interface")]
    AmbiguousElement(usize),

    #[error("triangle with vertices {0:?} is degenerate")]
    DegenerateTriangle([usize; 3]),

    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:e}")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("least-squares fit is rank deficient (smallest singular value {0:e})")]
    RankDeficient(f64),

    #[error("no unisolvent patch found around vertex {0}")]
    PatchExhausted(usize),

    #[error("effective index undefined for a vanishing true error")]
    DivisionByZero,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
