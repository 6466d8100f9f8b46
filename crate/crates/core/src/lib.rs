//! Analysis of 1-safe labelled Petri nets under step readiness semantics:
//! asynchronous and distributed implementations, class membership
//! predicates, and executable checks of the correctness arguments behind
//! the two implementation constructions.

pub mod classify;
pub mod corpus;
pub mod distribution;
pub mod dot;
pub mod error;
pub mod firing;
pub mod fixtures;
pub mod format;
pub mod limits;
pub mod marking;
pub mod net;
pub mod oracles;
pub mod reach;
pub mod semantics;
pub mod transform;
pub mod verdict;

pub use error::{Error, Result};
pub use firing::{enabled_steps, fire, LabelMultiset, Step};
pub use format::{emit_net, parse_net, ParseError};
pub use limits::{CancelToken, Execution, Limits};
pub use marking::Marking;
pub use net::{Label, LabelledNet, NetBuilder, PlaceId, TransId};
pub use reach::{reachability_graph, validate, ReachGraph};
pub use verdict::Verdict;
