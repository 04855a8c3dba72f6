pub mod analytic;
pub mod cli;
pub mod error;
pub mod feasibility;
pub mod io;
pub mod phasemap;
pub mod protocol;
pub mod qmat;
pub mod rng;

pub use error::{Error, Result};
