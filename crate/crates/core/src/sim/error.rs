use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("line {line}: {message}")]
    Runtime { line: u32, message: String },
    #[error("deadlock at time {at}: {message}")]
    Deadlock { at: u64, message: String },
    #[error("line {line}: hold can never be satisfied by the declared pool ({requests})")]
    UnsatisfiableHold { line: u32, requests: String },
    /// Failure inside one of several seeded runs. The cause is part of the message.
    #[error("run {index} (seed {seed}): {cause}")]
    Run { index: u32, seed: u64, cause: Box<SimError> },
}
