//! Comparison algorithms: FF-Replan on the most probable particle and POMCP
//! with shaped subgoal rewards.

mod ffreplan;
mod pomcp;
mod reward;

pub use ffreplan::*;
pub use pomcp::*;
pub use reward::*;
