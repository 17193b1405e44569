use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write output: {0}")]
    Write(#[from] io::Error),
    #[error(transparent)]
    Library(#[from] fermibath::Error),
    #[error("{0} verification check(s) failed")]
    Verification(usize),
}

impl CliError {
    /// 1 for failed checks, 3 for numerical failures, 2 for everything the
    /// user can fix in the invocation or the config.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Library(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
