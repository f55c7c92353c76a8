//! Exact k-strong price-of-anarchy bounds for resource allocation games.

pub mod bounds;
pub mod combinatorics;
pub mod error;
pub mod games;
pub mod lp;
pub mod rational;
pub mod report;
pub mod worstcase;
