//! Co-design engine for grammar-constrained dexterous hands.
//!
//! The crate covers the design side of morphology/control co-design:
//! procedural hand generation ([`grammar`]), structural encodings and
//! effective keys ([`design`]), a message-passing value network
//! ([`encoder`]), deterministic surrogate task evaluators ([`eval`]),
//! value-guided Graph Heuristic Search with MCTS and random baselines
//! ([`search`]), parameter sensitivity sweeps ([`sensitivity`]) and file
//! formats plus the command-line surface ([`io`], [`cli`]).

pub mod cli;
pub mod design;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod grammar;
pub mod search;
pub mod sensitivity;

pub use error::{Error, Result};
