pub mod classify;
pub mod error;
pub mod evaluator;
pub mod image;
pub mod interval;
pub mod oracle;
pub mod product;
pub mod series;
pub mod spec;
pub mod support;

pub use error::{Error, Result};
pub use interval::Interval;
