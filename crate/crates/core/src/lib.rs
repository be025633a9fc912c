pub mod anderson;
pub mod cli;
pub mod constants;
pub mod dynamics;
pub mod error;
pub mod holeburning;
pub mod numerics;
pub mod perturbative;
pub mod phase_diagram;
pub mod presets;
pub mod specfun;
pub mod steady_solver;
pub mod thermal;
pub mod tls_response;

pub use error::{Error, Result};
