//! Finite-dimensional quantum statistical mechanics.
//!
//! Density matrices, the Gibbs–von Neumann measure, canonical states,
//! passivity and ergotropy, collision-model heat baths, thermal cycles and
//! the reversible protocols that recover `S = -k tr ρ ln ρ`.
//!
//! ```
//! use qthermo::canonical::canonical_state;
//! use qthermo::distribution::Distribution;
//! use qthermo::operator::HermitianOperator;
//! use qthermo::passivity::ergotropy;
//!
//! let h = HermitianOperator::from_real_diagonal(&[0.0, 1.0]);
//! let rho = Distribution::diagonal(&[0.3, 0.7])?;
//! assert!((ergotropy(&rho, &h)? - 0.4).abs() < 1e-12);
//! let thermal = canonical_state(&h, 1.0)?;
//! assert!(ergotropy(&thermal, &h)? < 1e-12);
//! # Ok::<(), qthermo::Error>(())
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod canonical;
pub mod config;
pub mod distribution;
pub mod error;
pub mod interaction;
pub mod operator;
pub mod parallel;
pub mod passivity;
pub mod protocols;
pub mod random;
pub mod schedule;
pub mod verify;

pub use config::{Tolerances, Units};
pub use error::{Error, Result};
