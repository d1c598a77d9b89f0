pub mod ai;
pub mod error;
pub mod fit;
pub mod lz;
pub mod ode;
pub mod oracle;
pub mod pulse;
pub mod tfim;

pub use error::{Error, Result};
