use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("constant `{0}` defined twice")]
    DuplicateDefinition(String),
    #[error("definition of `{0}` contains executed actions")]
    NonStandardDefinition(String),
    #[error("unguarded recursion through `{0}`")]
    UnguardedRecursion(String),
    #[error("invalid bounds: {0}")]
    Bounds(String),
    #[error("malformed export: {0}")]
    Import(String),
    #[error("expansion component is not finite within bounds")]
    NotFinite,
}
