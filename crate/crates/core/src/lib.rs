//! Mølmer–Sørensen entangling gate in cavity QED.
//!
//! The crate is organised bottom-up:
//!
//! - [`qops`]: operators on truncated `atoms ⊗ photon` spaces.
//! - [`params`]: Raman-scheme inputs and the effective gate parameters derived from them.
//! - [`hamiltonians`]: the four-level, effective, interaction-picture and ⁸⁷Rb Hamiltonians.
//! - [`msgate`]: the closed-form ideal gate.
//! - [`perturbation`]: dressed basis and the overlap series in the dispersive shift χ.
//! - [`dynamics`]: Schrödinger and Lindblad propagation.
//! - [`fidelity`]: state, overlap and average gate fidelities.
//! - [`harness`]: scenario runners, config files, CSV/SVG output and the CLI.
//!
//! Frequencies are angular with ħ = 1. Parameter files quote frequencies in units of 2π·MHz,
//! which makes the time unit the microsecond.

pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod hamiltonians;
pub mod harness;
pub mod integrate;
pub mod msgate;
pub mod params;
pub mod perturbation;
pub mod qops;
pub mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
