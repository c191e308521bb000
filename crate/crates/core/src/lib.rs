//! Numerical toolkit for Lie algebroids and their A-path groupoids.
//!
//! The crate is organized bottom-up: symbolic coordinate expressions,
//! algebroid structure on a single chart, discretized A-paths and the
//! homotopy equation, exactly solvable oracle groupoids, the symplectic
//! form on cotangent path space and a finite model of étale-stack calculus.

pub mod algebroid;
pub mod etale;
pub mod exec;
pub mod expr;
pub mod oracle;
pub mod path;
pub mod report;
pub mod sampling;
pub mod symplectic;

pub use exec::Execution;
pub use report::CheckRecord;
