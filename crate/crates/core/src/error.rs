use crate::circuit::Violation;
use thiserror::Error;

/// Errors produced by the circuit data model and its file formats.
#[derive(Debug, Error)]
pub enum CircuitError {
    /// The circuit failed structural validation; all violations are listed.
    #[error("invalid circuit: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    /// An input assignment had the wrong number of bits.
    #[error("assignment has {got} bits, circuit has {expected} primary inputs")]
    AssignmentLength { expected: usize, got: usize },

    /// Exhaustive enumeration over `2^num_inputs` rows was refused.
    #[error("{num_inputs} primary inputs exceeds the {max}-input truth table cap")]
    TooManyInputs { num_inputs: usize, max: usize },

    /// A text file failed to parse. `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Two objects that must agree on shape did not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    let parts: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    parts.join("; ")
}

impl CircuitError {
    /// Convenience constructor for parse errors.
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        CircuitError::Parse {
            line,
            message: message.into(),
        }
    }
}
