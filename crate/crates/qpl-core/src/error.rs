//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by the toolkit.
///
/// The CLI maps `Resource` to exit code 2 and everything else to exit
/// code 1, so the variants distinguish "you asked for too much machine"
/// from "the arguments are wrong" and "the numerics disagree with the
/// algebra".
#[derive(Debug, Error)]
pub enum QplError {
    /// Input outside the range a table or precondition supports.
    #[error("range error: {0}")]
    Range(String),

    /// A table or sweep would exceed the configured memory budget.
    #[error("resource error: {what} needs {needed} entries but the budget is {budget}")]
    Resource {
        what: &'static str,
        needed: u64,
        budget: u64,
    },

    /// Invalid argument (failed precondition that is not a size issue).
    #[error("argument error: {0}")]
    Argument(String),

    /// Invalid experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value the algebra forces to be real/integral came out otherwise;
    /// indicates a construction bug, never silently rounded away.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    /// Operation called outside its natural domain; the message names the
    /// fallback to use.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cache or report I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
