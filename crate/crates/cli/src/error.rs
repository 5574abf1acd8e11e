use std::path::{Path, PathBuf};

use guwen_core::align::AlignError;
use guwen_core::corpus::CorpusError;
use guwen_core::eval::EvalError;
use guwen_core::model::ModelError;
use guwen_core::noising::NoiseError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing {what} at {} (run `{stage}` first)", path.display())]
    MissingArtifact { what: String, path: PathBuf, stage: String },
    #[error("io error on {}: {msg}", path.display())]
    Io { path: PathBuf, msg: String },
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("punctuation hook: {0}")]
    Hook(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Io { path: path.to_path_buf(), msg: e.to_string() }
    }
}
