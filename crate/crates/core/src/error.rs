use std::io;
use std::path::PathBuf;

/// Errors raised by the splinter library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid language profile: {0}")]
    InvalidProfile(String),

    #[error("no word survived frequency/script filtering (corpus and profile mismatch?)")]
    EmptyTable,

    #[error("no reduction was found for any word length (degenerate corpus)")]
    EmptyMap,

    #[error("format error in {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("insertion position {position} out of range for length {length}")]
    Range { position: isize, length: usize },

    #[error("unknown composite character U+{0:04X}")]
    UnknownComposite(u32),

    #[error("unknown reduction {index}:{letter} in frozen alphabet")]
    UnknownReduction { index: i32, letter: char },

    #[error("surface string contains foreign codepoint U+{0:04X}")]
    MixedScript(u32),

    #[error("malformed surface string: base letter after a composite character")]
    MalformedSurface,

    #[error("composite block exhausted after {0} entries")]
    AlphabetFull(usize),

    #[error("vocabulary size {requested} must exceed base alphabet size {base}")]
    VocabTooSmall { requested: usize, base: usize },

    #[error("corpus contains no words")]
    EmptyCorpus,

    #[error("token distribution has a single type; efficiency undefined")]
    DegenerateDistribution,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
