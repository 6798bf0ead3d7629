//! Shortcut-assisted multistate stimulated Raman adiabatic passage.
//!
//! Builds resonant chain Hamiltonians (three-state, the five-state
//! `J_g = 2 ↔ J_e = 1, 2` M-chains, two σπ chains, arbitrary odd chains),
//! synthesizes counterdiabatic shortcut fields analytically and numerically,
//! propagates the Schrödinger equation with exact unitary steps, and runs the
//! robustness scans. Units: ħ = 1, time in pulse widths `T`, frequencies in
//! `1/T`.

pub mod drive;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod propagator;
pub mod scheme;
pub mod shortcut;
pub mod verify;

pub use error::{Error, Result};
