//! Solution synthesis for transport and field equations under coordinate
//! transformations.
//!
//! The core idea: take a seed solution of the continuity equation, the
//! collisionless kinetic equation, or Maxwell's equations, and push it through
//! a coordinate transformation to obtain a new exact solution in closed form.
//! The workhorse transformation shifts the spatial coordinates by a
//! displacement field `u(r, t)` while leaving time untouched; time-independent
//! spatial maps `r' = W(r)` cover graded-media constructions. Every synthesized
//! solution can be verified numerically: residual sweeps evaluate the governing
//! equations on collocated grids with central differences and report norms and
//! convergence orders.
//!
//! Module map:
//! - [`kinematics`]: Jacobians, metrics, connection coefficients, and the
//!   divergence-form expansions of the volume factor and cofactor matrix.
//! - [`continuity`]: four-current transformation, particle deposition,
//!   polarization/magnetization bookkeeping, residual checks.
//! - [`kinetics`]: phase-space distribution transformation, inertial forces,
//!   moments, and kinetic-equation residuals.
//! - [`electrodynamics`]: field-tensor packing, field/material transformation
//!   laws, graded-slab construction, Maxwell residuals.
//! - [`completion`]: restoring the source-free Maxwell pair for a field that
//!   satisfies only the sourced pair, in a time-harmonic 1-D reduction.
//! - [`plasma`]: the oscillating charged slab assembled end to end from the
//!   pieces above.
//!
//! Conventions: Gaussian units, metric signature `(+,-,-,-)`, `x^0 = c t` with
//! configurable `c` (default 1 in code units).

pub mod completion;
pub mod continuity;
pub mod displacement;
pub mod electrodynamics;
mod error;
pub mod grid;
pub mod io;
pub mod kinematics;
pub mod kinetics;
pub mod ode;
pub mod plasma;
pub mod quadrature;
pub mod scalar_fn;
pub mod spacetime;
pub mod transform;

pub use error::{Error, Result};
pub use spacetime::{Frame, SpaceTimePoint};

// Re-exported so downstream code can name the linear-algebra and complex
// types that appear in this crate's public signatures.
pub use nalgebra;
pub use num_complex;
