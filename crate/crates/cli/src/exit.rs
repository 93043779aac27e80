//! Process exit codes by error class.

use splinter::Error;

use crate::config::ConfigError;

pub const CONFIG: u8 = 3;
pub const IO: u8 = 4;
pub const INVALID_INPUT: u8 = 5;
pub const INSUFFICIENT_DATA: u8 = 6;
pub const OTHER: u8 = 1;

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return CONFIG;
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return IO;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io { .. } => IO,
                Error::InvalidProfile(_)
                | Error::Format { .. }
                | Error::Range { .. }
                | Error::UnknownComposite(_)
                | Error::UnknownReduction { .. }
                | Error::MixedScript(_)
                | Error::MalformedSurface => INVALID_INPUT,
                Error::EmptyTable
                | Error::EmptyMap
                | Error::AlphabetFull(_)
                | Error::VocabTooSmall { .. }
                | Error::EmptyCorpus
                | Error::DegenerateDistribution
                | Error::InsufficientData(_) => INSUFFICIENT_DATA,
            };
        }
    }
    OTHER
}
