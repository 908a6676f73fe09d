pub(crate) mod binio;
pub mod bitstream;
pub mod config;
pub mod dbn;
pub mod error;
pub mod layers;
pub mod lightfield;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod pnm;
pub mod quality;
pub mod synth;
pub mod wbi;

pub use error::{Error, Result};
