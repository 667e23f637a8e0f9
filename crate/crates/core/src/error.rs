use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty charge sequence")]
    Empty,
    #[error("invalid character {0:?} in charge sequence (expected '+' or '-')")]
    InvalidChar(char),
    #[error("OddLength: sequence length {0} is odd")]
    OddLength(usize),
    #[error("NotCentered: period charge sum is {0}, expected 0")]
    NotCentered(i64),
    #[error("Trivial: every pair (2k-1, 2k) has opposite charges")]
    Trivial,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length {x} is not in residue class {class} mod {modulus}")]
    ClassMismatch { x: u64, class: usize, modulus: usize },
    #[error("matrix has a non-positive or non-finite entry at ({0}, {1})")]
    NotPositive(usize, usize),
    #[error("power iteration did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error("measure carries tail mass {0}; truncate it to its head first")]
    NotHeadOnly(f64),
    #[error("excursion measure has infinite mean (b = 0)")]
    InfiniteMean,
    #[error("chain length {n} exceeds the configured maximum {max}")]
    TooLong { n: usize, max: usize },
    #[error("root bracketing failed: {0}")]
    NoRoot(String),
}

impl Error {
    /// Errors caused by bad user input, as opposed to numerical failures.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Empty
                | Error::InvalidChar(_)
                | Error::OddLength(_)
                | Error::NotCentered(_)
                | Error::Trivial
                | Error::InvalidArgument(_)
                | Error::ClassMismatch { .. }
                | Error::TooLong { .. }
        )
    }
}
