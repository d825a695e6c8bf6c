//! Grounded STRIPS-subset world model: scenario files, grounding,
//! applicability, transitions and goal tests.

mod domain;
mod parse;
mod scenario;

pub use domain::*;
pub use parse::*;
pub use scenario::*;
