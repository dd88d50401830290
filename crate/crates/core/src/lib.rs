//! Exact symbolic verification of multiplicative connections on coordinate Lie
//! groupoids and IM connections on Lie algebroids.

pub mod algebroid;
pub mod cli;
pub mod constructors;
pub mod corpus;
pub mod geometry;
pub mod groupoid;
pub mod imconn;
pub mod report;
pub mod symkernel;
