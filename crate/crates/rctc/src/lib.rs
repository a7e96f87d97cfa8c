//! Parser, transition engine, bounded state-space explorer, equivalence
//! checkers and law harness for a reversible truly concurrent process calculus.

pub mod cli;
pub mod equiv;
pub mod error;
pub mod laws;
pub mod lts;
pub mod pomset;
pub mod sos;
pub mod syntax;
pub mod term;

pub use error::Error;
