//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod corpus;
pub mod descriptor_oracles;
pub mod fusion_fixture;
pub mod gradcheck;
pub mod tables;
