pub mod bundled;
pub mod classify;
pub mod cli;
pub mod compliance;
pub mod corpus;
pub mod error;
pub mod lawmodel;
pub mod mapping;
pub mod preprocess;
pub mod similarity;
pub mod stem;

pub use error::{Error, Result};
