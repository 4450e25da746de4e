//! Error-to-exit-code mapping: 1 for I/O failures, 2 for anything the user
//! can fix in their inputs (bad values, malformed files, shape mismatches).

use std::fmt;

use hot_core::harmonic::HarmonicError;
use hot_core::metrics::MetricsError;
use hot_core::spectral::SpectralError;
use hot_core::synth::SynthError;
use hot_core::tensor_io::{ConfigError, SignalCsvError, TensorIoError};
use hot_core::transport::TransportError;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(msg) | CliError::Validation(msg) => f.write_str(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<TensorIoError> for CliError {
    fn from(err: TensorIoError) -> Self {
        match err {
            TensorIoError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SignalCsvError> for CliError {
    fn from(err: SignalCsvError) -> Self {
        match err {
            SignalCsvError::Io(inner) => CliError::Io(inner.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(err: SpectralError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<HarmonicError> for CliError {
    fn from(err: HarmonicError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(err: TransportError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(err: MetricsError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(err: SynthError) -> Self {
        CliError::Validation(err.to_string())
    }
}
