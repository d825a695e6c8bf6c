//! Anytime task planning for a mobile robot whose world is fully known except
//! for the initial locations of some items and people.
//!
//! The crate provides a grounded STRIPS world model ([`strips`]), a greedy
//! classical planner ([`planner`]), the belief/simulator layer ([`pomdp`]), the
//! plan-seeded belief-tree search ([`portal`]), FF-Replan and POMCP
//! ([`baselines`]), benchmark domain builders ([`scenarios`]) and the
//! experiment runner ([`bench`]).

pub mod baselines;
pub mod bench;
pub mod planner;
pub mod pomdp;
pub mod portal;
pub mod rng;
pub mod scenarios;
pub mod strips;
