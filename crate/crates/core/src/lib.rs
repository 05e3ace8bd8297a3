// Validation guards throughout the crate use `!(x > 0.0)` instead of
// `x <= 0.0` on purpose: the negated form also rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Discrete graph energies on random point clouds and their continuum limits.
//!
//! The crate evaluates the graph vectorial symmetric total variation
//!
//! ```text
//! GTV(u) = (1/eps^2) (1/n^2) sum_{i,j} eta_eps(X_i - X_j) |(u(X_i) - u(X_j)) . (X_i - X_j)|
//! ```
//!
//! on point clouds sampled from a density `rho` on a bounded domain, together
//! with the matching continuum energy
//!
//! ```text
//! TV_eta(u; rho^2) = int_D rho^2 phi_eta(Eu/|Eu|) d|Eu|,
//! phi_eta(A) = int eta(xi) |A xi . xi| dxi,
//! ```
//!
//! the TL1 transport metric between function/measure pairs, transport-map
//! scaling diagnostics, one-dimensional slice energies, and an experiment
//! harness that measures how the discrete energy approaches the continuum
//! value as the cloud grows and the interaction radius shrinks.
//!
//! Module map:
//! - [`kernels`]: radial interaction kernels, their rescalings, and the
//!   induced matrix norm `phi_eta`.
//! - [`domain_sampling`]: box/ball domains, bounded densities, i.i.d.
//!   sampling, and deterministic grid quantizations.
//! - [`graph_energy`]: the discrete energy (naive and cell-list paths) and a
//!   Monte Carlo mean-field oracle.
//! - [`transport`]: TL1 distances, assignment-based transport maps, and
//!   displacement scaling diagnostics.
//! - [`continuum_tv`]: displacement fields and the continuum energy for
//!   smooth and piecewise-rigid fields.
//! - [`slicing`]: one-dimensional slice energies and the Fubini consistency
//!   check between the sliced and direct forms of the energy.
//! - [`experiments`]: configuration, convergence studies, rate fits, and
//!   CSV/SVG reporting.

pub mod celllist;
pub mod continuum_tv;
pub mod domain_sampling;
mod error;
pub mod experiments;
pub mod graph_energy;
pub mod kernels;
pub mod quad;
pub mod slicing;
pub mod transport;

pub use error::{Error, Result};
pub use kernels::{Kernel, SymMatrix};
pub use quad::QuadratureSpec;
