//! Exactly solvable structures attached to the softened growth model, each
//! verified either in exact rational arithmetic or against tight numerical
//! drift bounds.
//!
//! * [`toda`] integrates the exponential chain with a fourth-order
//!   symplectic scheme; [`lax`] builds the companion matrices whose
//!   spectrum the flow preserves.
//! * [`tau`] grows determinant solutions of that chain from a single seed
//!   function of exponentials and checks the bilinear identity they obey.
//! * [`yv`] builds the rational-solution polynomial ladder, [`painleve`]
//!   substitutes its log-derivative ratios into the second Painleve
//!   equation, and the sigma gauge check ties the two ladders together.
//! * [`lie`] verifies the finite-dimensional commutation table and its
//!   quadratic invariant.
//! * [`anderson`] closes the loop between a tridiagonal spectrum and the
//!   boundary values of its transfer recursion.
//!
//! [`ratpoly`] supplies the exact polynomial arithmetic everything above
//! relies on.

pub mod anderson;
pub mod lax;
pub mod lie;
pub mod painleve;
pub mod ratpoly;
pub mod tau;
pub mod toda;
pub mod yv;

pub use anderson::{anderson_duality_check, transfer_orbit};
pub use lax::{
    isospectrality_check, lax_eigenvalues, lax_matrix, lax_matrix_isospectral,
    SpectralDriftReport,
};
pub use lie::{lie_checks, LieReport};
pub use painleve::painleve2_residual;
pub use ratpoly::{ComplexPoly, RationalPoly};
pub use tau::{bilinear_residual, chain_position, tau_from_phi, ExpPoly, MAX_CHAIN_DEPTH};
pub use toda::{toda_integrate, toda_rhs, TodaBoundary, TodaState, TodaTrajectory};
pub use yv::{sigma_gauge_check, yablonskii, GaugeReport};
