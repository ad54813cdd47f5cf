use thiserror::Error;

/// Errors surfaced by channel math, particle simulation, and the codec.
#[derive(Debug, Error)]
pub enum Error {
    /// A value lies outside the domain an operation is defined on.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The inputs make the requested quantity meaningless, for example a
    /// zero transmitter-receiver distance has no finite capture time.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A decoded frame does not begin with the expected preamble.
    #[error("sync error: {0}")]
    Sync(String),

    /// A bit stream cannot be split into whole bytes.
    #[error("framing error: {0}")]
    Framing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
