//! Finite-volume solver and verification harness for a 2x2 system of road
//! traffic conservation laws of generalized Aw-Rascle-Zhang type.
//!
//! The system couples a density `rho` (conserved) with an orderliness field
//! `w` (transported with the flow). The solver advances the density with a
//! Godunov step built on two-flux interface fluxes and advances `w` by
//! averaging along numerical characteristics. The crate also ships an exact
//! Riemann solver used as an oracle, the admissibility-germ algebra of the
//! two-flux interface, and a diagnostics suite that measures stability
//! bounds, total-variation budgets, conservation defects, and entropy
//! residuals on finished runs.
//!
//! Modules:
//! - [`model`]: velocity pair, coupled flux, assumption validators
//! - [`interface`]: Godunov flux, interface flux, germ algebra
//! - [`scheme`]: mesh, CFL, marching scheme
//! - [`riemann`]: exact two-state solver (the oracle)
//! - [`diagnostics`]: residuals, front tracking, reports
//! - [`config`]: JSON run configuration shared by the CLI and fuzz targets
//! - [`verify`]: the interface property battery behind `garz check`

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod interface;
pub mod model;
pub mod riemann;
pub mod scheme;
pub mod verify;

pub use error::{GarzError, Result};
pub use model::{FluxFamily, VelocityModel};
