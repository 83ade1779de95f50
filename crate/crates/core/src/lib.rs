pub mod config;
pub mod evaluators;
pub mod evolvers;
pub mod geometry;
pub mod individuals;
pub mod objective;
pub mod rng;
