//! Minimal control power of controlled quantum teleportation for multiqubit
//! pure states.
//!
//! * [`qlinalg`]: dense complex linear algebra, partial traces, Haar sampling.
//! * [`states`]: pure states, the GHZ and W families, partitions, state files.
//! * [`measures`]: concurrence, tangles, correlation matrices, fully entangled
//!   fraction and the two teleportation-fidelity formulas.
//! * [`ctpower`]: controlled fidelity, control power, minimal control power and
//!   the closed-form family evaluators.
//! * [`simkit`]: brute-force protocol simulation used as an independent oracle.

pub mod ctpower;
pub mod error;
pub mod measures;
pub mod optim;
pub mod qlinalg;
pub mod simkit;
pub mod states;

pub use error::{Error, Result};
