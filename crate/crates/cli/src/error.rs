use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] bps_core::Error),
}

impl CliError {
    /// Every error is an input error; tolerance failures are not errors.
    pub fn exit_code(&self) -> u8 {
        1
    }
}
