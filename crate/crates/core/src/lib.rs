//! Covariant transforms `v ↦ F(ρ(g⁻¹)v)` for concrete groups, representations
//! and fiducial operators.
//!
//! The crate is organised bottom-up:
//!
//! * [`grouplib`]: exact group laws for the affine group, SL(2,R), SU(1,1)
//!   and SE(2), plus the log/uniform affine grids used for sampling.
//! * [`signal`]: sampled signals on the line and the plane, quadrature,
//!   interpolation, the Cauchy integral and the unitary DFT.
//! * [`repr`]: representations acting on signals, half-plane fields and
//!   matrices.
//! * [`fiducial`]: the catalogue of fiducial operators.
//! * [`xform`]: the transform engine and its analyzers (intertwining,
//!   maximal function, Cauchy–Riemann residual, Radon transform, ...).
//! * [`pairing`]: Haar and Hardy pairings and the inverse transform.
//! * [`opmodel`]: small dense complex matrices, defect operators, the
//!   characteristic function and numerical-range sampling.
//! * [`cli`]: JSON-configured batch driver behind the `covtrans` binary.

pub mod cli;
pub mod error;
pub mod fiducial;
pub mod grouplib;
pub mod opmodel;
pub mod pairing;
pub mod repr;
pub mod serde_complex;
pub mod signal;
pub mod verify;
pub mod xform;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
