//! Branched covers of orbit cylinders, made executable.
//!
//! The crate turns the combinatorial and algebraic skeleton of moduli spaces
//! of branched covers over a trivial cylinder into exact computations:
//!
//! * [`catalog`] — geometric input data: simple Reeb orbits with
//!   Conley-Zehnder iteration models, actions and a string of closed forms;
//! * [`moduli`] — Fredholm index and dimension arithmetic for multiplicity
//!   profiles;
//! * [`covers`] — numeric realization of covers as rational functions on the
//!   sphere, winding-number and neck-shift checks;
//! * [`strata`] — labelled trees with level structure, derived edge
//!   multiplicities, codimension-one boundary enumeration;
//! * [`euler`] — machine-checkable certificates that the obstruction-bundle
//!   Euler number of every index-one profile vanishes;
//! * [`algebra`] — the graded commutative algebra on `p`, `q`, `t` variables
//!   over exact rationals with Koszul signs and the weighted Poisson bracket;
//! * [`sft`] — the zero-energy Hamiltonian, the contact-homology differential
//!   and the action filtration;
//! * [`spectral`] — the E¹/E² pages of the filtered complex and the vanishing
//!   criterion;
//! * [`io`] — catalog files and report plumbing shared with the CLI.

pub mod algebra;
pub mod catalog;
pub mod covers;
pub mod euler;
pub mod io;
pub mod moduli;
pub mod rat;
pub mod sft;
pub mod spectral;
pub mod strata;

/// Crate-wide error type.
///
/// The split between `Validation` and `Invariant` mirrors the CLI exit codes:
/// validation failures are bad inputs (exit 1), invariant violations signal an
/// internal inconsistency that should never occur on valid data (exit 2).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Validation(_) | Error::Io(_) => 1,
            Error::Invariant(_) | Error::Numeric(_) => 2,
        }
    }
}
