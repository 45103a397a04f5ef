//! Simulation lab for multiparty quantum secret sharing over entanglement
//! swapping: label algebra, a statevector oracle, protocol engines, and the
//! participant attacks against them.

pub mod adversary;
pub mod bell;
pub mod error;
pub mod protocol;
pub mod qstate;
pub mod stats;
pub mod verify;

pub use bell::{Basis, BellLabel, Correlation, PauliOp, SecretBits};
pub use error::{Error, Result};
pub use qstate::{PureState, QubitId};
