//! Dimensional reduction for the nonlinear inverse heat conduction problem.
//!
//! Cauchy data `(g, q) = (u, ∂u/∂x)` measured on the face `x = a` of a
//! space-time cylinder is expanded in a tensor polynomial-exponential basis
//! over the transverse space and time. Truncating the expansion turns the
//! parabolic equation into a finite system of second-order ODEs for the
//! Fourier coefficients along the depth axis `x`, which is marched with a
//! Runge-Kutta integrator and resummed into a space-time field.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`] - the orthonormal polynomial-exponential basis on an interval.
//! * [`tensor`] - product basis over the cylinder and the line-up indexing.
//! * [`numerics`] - uniform grids, cylinder fields and composite quadrature.
//! * [`reduction`] - data projection, coupling matrix, projected nonlinearity
//!   and cutoff selection.
//! * [`ivp`] - fixed-step and adaptive Runge-Kutta marching.
//! * [`problems`] - the built-in benchmark problems and the noise model.
//! * [`report`] - field reconstruction and error metrics.
//! * [`pipeline`] - end-to-end runs, sweeps and artifact output.

pub mod basis;
pub mod error;
pub mod ivp;
pub mod numerics;
pub mod pipeline;
pub mod problems;
pub mod reduction;
pub mod report;
pub mod tensor;

pub use error::{Error, Result};
