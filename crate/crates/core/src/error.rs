use thiserror::Error;

/// A malformed text input, with the 1-based line where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

/// Failures shared by the solvers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("time budget exhausted")]
    Budget,
    #[error("optimum exceeds the cap of {0} rounds")]
    ExceedsCap(u32),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// Splits text into (1-based line number, tokens) pairs, skipping blank lines
/// and lines starting with `#`.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

pub(crate) fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| ParseError::new(line, format!("bad {what} `{tok}`")))
}
