pub mod analysis;
pub mod blocklength;
pub mod channel;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod series;
pub mod special;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
