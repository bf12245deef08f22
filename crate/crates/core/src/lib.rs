//! Dual feasible solutions to Delsarte's linear program for binary codes and
//! to its level-ℓ hierarchies, with exact verifiers and ground-truth oracles.

pub mod constructions;
pub mod cube;
pub mod error;
pub mod format;
pub mod krawtchouk;
pub mod lp;
pub mod oracle;
pub mod profile;
pub mod rates;
pub mod scalar;
pub mod search;
pub mod table;

pub use cube::{weight, CubeMatrix, CubePoint};
pub use error::{Error, Result};
pub use lp::{Instance, Variant, VerificationReport};
pub use scalar::{Mode, Number, Scalar};
pub use table::{DenseCap, Side, ValueTable, Values};
