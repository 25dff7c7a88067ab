pub mod analysis;
pub mod asymptotics;
pub mod error;
pub mod oracle;
pub mod priors;
pub mod propriety;
pub mod specfun;
pub mod stacy;

pub use error::{Error, Result};
