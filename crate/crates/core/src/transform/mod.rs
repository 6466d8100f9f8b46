//! Net transformations: the asynchronous implementation under a
//! distribution and the transition-controlled-choice implementation.

mod asynchronous;
mod tcc;

pub use asynchronous::{async_implementation, AsyncNet, AsyncOrigin};
pub use tcc::{conflict_classes, locations_of_tcc, tcc_implementation, tcc_with_classes, ConflictClasses, TccNet, TccOrigin};
