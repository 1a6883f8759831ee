//! Skill composition and distributed execution with behavior trees.

pub mod backchain;
pub mod bt;
pub mod btsync;
pub mod cli;
pub mod dsl;
pub mod plant;
pub mod skills;
pub mod runtime;
pub mod worldmodel;
