pub mod decomposition;
pub mod error;
pub mod field;
pub mod invariants;
pub mod models;
pub mod numerics;
pub mod stretch;
pub mod transport;
pub mod trs;

pub use error::{Error, Result};
