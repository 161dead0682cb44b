//! Independent oracles, seeded generators and the criterion checks shared by
//! the core integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod criteria;
pub mod gen;
pub mod reference;
