//! Simulation and verification toolkit for next-nearest-neighbour ballistic
//! deposition and the algebraic structures it maps onto.
//!
//! The same growth process is realised four ways and the realisations are
//! cross-checked against each other:
//!
//! * direct lattice simulation, hard (integer) and softened (log-sum-exp)
//!   update rules — [`deposition`];
//! * words in a locally free semigroup, with a canonical normal order and a
//!   heap <-> word bijection — [`words`];
//! * products of sparse matrices, tropical for the hard rule and random
//!   `SL(2,R)` blocks for the soft one, with stabilised radial coordinates —
//!   [`matrix_growth`];
//! * a multiplicative random walk on the hyperbolic upper half-plane driven
//!   by three involutive isometries — [`hyperbolic`].
//!
//! The [`integrable`] family of modules verifies the exactly solvable
//! structures connected to the soft model: Toda chains with Lax pairs,
//! determinant tau functions, rational Painleve II solutions, and a
//! transfer-matrix/tridiagonal duality. Everything there is either checked in
//! exact rational arithmetic or against tight numerical drift bounds.
//!
//! [`analysis`] holds the ensemble statistics: interface widths, scaling
//! fits, collapse diagnostics and distribution moments.

pub mod analysis;
pub mod deposition;
pub mod hyperbolic;
pub mod integrable;
pub mod matrix_growth;
pub mod rng;
pub mod words;

pub use deposition::{BoundaryCondition, ColumnSequence, HeightProfile};
pub use rng::RngStream;

/// Errors shared across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("input domain violation: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("trajectory blew up at step {step} (t = {t}); last valid state retained")]
    Blowup {
        step: u64,
        t: f64,
        last_valid: Box<integrable::TodaState>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
