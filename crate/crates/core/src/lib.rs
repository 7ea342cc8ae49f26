//! Paradifferential pseudospectral solver for dispersive equations
//!
//! ```text
//! (∂t + ∂x³) u = F(u, u_x, u_xx),   F polynomial without u·u_xx terms,
//! ```
//!
//! on a periodic box. The solution is assembled the constructive way:
//! rescale the data so its high-frequency part is small, split off the
//! low-frequency part, treat the quadratic terms that carry two derivatives
//! on one factor paradifferentially (frozen low-frequency coefficient, one
//! Airy solve per Littlewood-Paley band after an exponential conjugation),
//! and iterate the resulting solution map to its fixed point.
//!
//! Module map:
//! - [`spectral`]: grid, transforms, Littlewood-Paley projectors, paraproduct.
//! - [`norms`]: cube partitions, local energy norms and the forcing-space surrogate.
//! - [`nonlinearity`]: monomial validation, scaling exponents, bad/good split.
//! - [`rescale`]: data rescaling, low/high split, choice of the rescaling level.
//! - [`linear`]: Airy/Duhamel solves, the conjugated band solve and correction series.
//! - [`iteration`]: admission checks, the outer solution map, the end-to-end solve.
//! - [`reference`]: an independent split-step integrator used as an oracle.
//! - [`diagnostics`]: the Mizohata integral and randomized estimate probes.

pub mod diagnostics;
pub mod error;
pub mod iteration;
pub mod linear;
pub mod nonlinearity;
pub mod norms;
pub mod random;
pub mod reference;
pub mod rescale;
pub mod spectral;

pub use num_complex::Complex64;

pub use error::{Result, SolverError};
pub use spectral::{Grid, SpaceTimeField, SpectralField, TimeGrid};
