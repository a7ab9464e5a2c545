//! Correlations without causal order.
//!
//! Deterministic vertices of correlation polytopes, their signalling
//! graphs, causality and deterministic consistency; classical processes
//! and their fixed points; process matrices; witness functionals; and the
//! robustness of antinomy.

pub mod antinomy;
pub mod causality;
pub mod digraph;
pub mod error;
pub mod flags;
pub mod hull;
pub mod numeric;
pub mod pools;
pub mod process;
pub mod quantum;
pub mod radix;
pub mod reproduce;
pub mod scenario;
pub mod witnesses;

pub use error::{Error, Result};
pub use numeric::{Num, NumericMode, DEFAULT_EPS};
pub use scenario::{Correlation, Scenario, Vertex};
