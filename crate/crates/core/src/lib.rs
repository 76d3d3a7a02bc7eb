pub mod cut_improve;
pub mod decomp;
pub mod embed;
pub mod error;
pub mod generators;
pub mod graph;
pub mod gs_round;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod orth_sep;
pub mod planted;
pub mod rng;
pub mod sse_flow;

pub use error::{Error, Result};
pub use graph::{CutResult, Graph};
