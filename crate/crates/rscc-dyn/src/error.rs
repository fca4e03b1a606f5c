use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A polynomial violated a degree requirement (escape certification needs
    /// every atom to have degree at least 2).
    #[error("degree error: {0}")]
    Degree(String),

    /// A parameter was outside its admissible range.
    #[error("parameter error: {0}")]
    Param(String),

    /// Model validation failed at load time (transition rows, state closure).
    #[error("model validation failed: {0}")]
    Validation(String),

    /// Escape certification is inapplicable (some atom has degree < 2).
    #[error("radius error: {0}")]
    Radius(String),

    /// The admissible-word tree exceeded the configured node budget.
    #[error("word search exceeded node budget of {0}")]
    Branching(usize),

    /// A state subset carried no stationary mass.
    #[error("state set has zero mass under the given distribution")]
    EmptyMass,

    /// Malformed configuration input.
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
