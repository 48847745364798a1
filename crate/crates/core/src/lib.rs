//! Pairing-heap laboratory.
//!
//! Four pairing-heap variants over a shared link primitive, plus a replay
//! instrument that tracks rank-difference potentials, boxes and epochs to
//! check the amortized-analysis inequalities operation by operation.

pub mod accounting;
pub mod cli;
pub mod heap;
pub mod oracle;
pub mod potential;
pub mod variants;
pub mod workloads;

pub use heap::{BinaryView, Handle, Heap, HeapError, Violation};
pub use variants::{meld, ArbitraryPolicy, LinkEvent, OpKind, OpStats, Round, Variant};
