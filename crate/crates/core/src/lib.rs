//! Monte-Carlo simulation and analysis of global connectivity in mobile
//! ad-hoc networks whose nodes perform an exclusion random walk on a
//! periodic triangular lattice.

pub mod analysis;
pub mod connectivity;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod netmetrics;

pub use error::{Error, Result};
