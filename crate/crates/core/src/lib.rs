//! Telephone broadcast toolkit: exact and parameterized solvers,
//! approximations, lower bounds and hard-instance constructions.

pub mod approx;
pub mod bitset;
pub mod bounds;
pub mod canon;
pub mod decomposition;
pub mod dtc;
pub mod error;
pub mod exact;
pub mod flow;
pub mod generate;
pub mod graph;
pub mod protocol;
pub mod reductions;
pub mod vi;

pub use bitset::VertexSet;
pub use graph::Graph;
pub use protocol::BroadcastProtocol;
