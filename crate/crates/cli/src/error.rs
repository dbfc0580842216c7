use std::path::PathBuf;

use pseudolabel::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] pseudolabel::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    /// 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            },
            CliError::Io { .. } => 3,
            CliError::Config(_) => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_kind() {
        let core = |e: pseudolabel::Error| CliError::from(e).exit_code();
        assert_eq!(core(pseudolabel::Error::Config("x".into())), 2);
        assert_eq!(core(pseudolabel::Error::Empty("x".into())), 3);
        assert_eq!(core(pseudolabel::Error::Numeric("x".into())), 4);
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
    }
}
