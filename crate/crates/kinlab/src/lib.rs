//! Simulation and verification laboratory for one-dimensional kinetic
//! particles with heavy-tailed velocity equilibria and boundary reflection.
//!
//! The library is organized around a single physical setup: a particle whose
//! velocity solves `dV = F(V) dt + dB` for a restoring force `F` derived
//! from an even profile `theta`, and whose position is the time integral of
//! the velocity. Positions are confined to the half line by one of three
//! boundary rules (diffusive restart, specular flip, inelastic absorption
//! via a time change). Under diffusive rescaling the position converges to
//! a symmetric alpha-stable process reflected on its running infimum, and
//! every module here either simulates a piece of that picture or measures
//! it:
//!
//! * [`model`] - force fields and the analytic quantities they induce
//!   (drift, scale function, speed density, diffusion constants, expected
//!   hitting times).
//! * [`engine`] - Euler-Maruyama simulation of the free, reflected,
//!   specular, and inelastic dynamics with deterministic seeding and
//!   boundary-event logs.
//! * [`stable`] - reference sampling for the limit objects: exact stable
//!   increments, reflected paths, and an independent Brownian construction
//!   used as a cross-validation oracle.
//! * [`analysis`] - path functionals and statistics: running extrema,
//!   crossing times, oscillation diagnostics, approximate path distance,
//!   Kolmogorov-Smirnov statistics, tail exponent fits.
//! * [`generator`] - numerical checks of the weak formulations: the
//!   fractional generator of the reflected limit in two integral forms,
//!   finite-difference weak-form residuals, the kinetic boundary-measure
//!   identity, and density asymptotics.
//! * [`harness`] - named, reproducible experiments tying the modules
//!   together, with CSV/JSON artifacts and a CLI front end.

pub mod analysis;
pub mod engine;
pub mod generator;
pub mod harness;
pub mod model;
pub mod numeric;
pub mod stable;

pub use engine::{BoundaryEvent, BoundaryLaw, EventKind, PathSample, RngStream, SimGrid};
pub use model::{ForceField, StableParams};
