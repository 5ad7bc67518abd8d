//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod algebra;
pub mod envs;
pub mod instrs;
