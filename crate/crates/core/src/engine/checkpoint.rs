//! Versioned key-value checkpoint files.
//!
//! ```text
//! # sepprob checkpoint
//! version = 1
//! case = qubit
//! seed = 42
//! chunk_size = 1000000
//! chunks_done = 50
//! n_total = 50000000
//! n_positive = 12345678
//! n_sep = 2992901
//! ```
//!
//! Every key must appear exactly once; blank lines and `#` comments are
//! ignored. `n_total`, `n_positive` and `n_sep` are the tally accumulated
//! over chunks `0..chunks_done`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::TallyCounts;
use crate::StateCase;

pub const CHECKPOINT_VERSION: u32 = 1;

const KEYS: [&str; 8] = [
    "version",
    "case",
    "seed",
    "chunk_size",
    "chunks_done",
    "n_total",
    "n_positive",
    "n_sep",
];

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("checkpoint line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("checkpoint: unknown field `{0}`")]
    UnknownField(String),
    #[error("checkpoint: duplicate field `{0}`")]
    DuplicateField(&'static str),
    #[error("checkpoint: missing field `{0}`")]
    MissingField(&'static str),
    #[error("checkpoint: field `{field}` has invalid value `{value}`")]
    InvalidValue { field: &'static str, value: String },
    #[error("checkpoint: unsupported version {found} (expected {CHECKPOINT_VERSION})")]
    Version { found: u32 },
    #[error("checkpoint: tally violates n_sep <= n_positive <= n_total")]
    Tally,
    #[error("checkpoint does not match this run: {0}")]
    Mismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    pub case: StateCase,
    pub seed: u64,
    pub chunk_size: u64,
    pub chunks_done: u64,
    pub tally: TallyCounts,
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        format!(
            "# sepprob checkpoint\nversion = {}\ncase = {}\nseed = {}\nchunk_size = {}\nchunks_done = {}\nn_total = {}\nn_positive = {}\nn_sep = {}\n",
            CHECKPOINT_VERSION,
            self.case,
            self.seed,
            self.chunk_size,
            self.chunks_done,
            self.tally.n_total,
            self.tally.n_positive,
            self.tally.n_sep,
        )
    }

    pub fn parse(text: &str) -> Result<Self, CheckpointError> {
        let mut values: [Option<&str>; KEYS.len()] = [None; KEYS.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(CheckpointError::Syntax { line: lineno + 1 })?;
            let key = key.trim();
            let slot = KEYS
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| CheckpointError::UnknownField(key.to_string()))?;
            if values[slot].replace(value.trim()).is_some() {
                return Err(CheckpointError::DuplicateField(KEYS[slot]));
            }
        }
        let field = |i: usize| values[i].ok_or(CheckpointError::MissingField(KEYS[i]));
        let number = |i: usize| -> Result<u64, CheckpointError> {
            let v = field(i)?;
            v.parse().map_err(|_| CheckpointError::InvalidValue {
                field: KEYS[i],
                value: v.to_string(),
            })
        };

        let version = number(0)?;
        if version != u64::from(CHECKPOINT_VERSION) {
            return Err(CheckpointError::Version {
                found: u32::try_from(version).unwrap_or(u32::MAX),
            });
        }
        let case_str = field(1)?;
        let case = case_str.parse().map_err(|_| CheckpointError::InvalidValue {
            field: "case",
            value: case_str.to_string(),
        })?;
        let checkpoint = Checkpoint {
            case,
            seed: number(2)?,
            chunk_size: number(3)?,
            chunks_done: number(4)?,
            tally: TallyCounts {
                n_total: number(5)?,
                n_positive: number(6)?,
                n_sep: number(7)?,
            },
        };
        if checkpoint.chunk_size == 0 {
            return Err(CheckpointError::InvalidValue {
                field: "chunk_size",
                value: "0".into(),
            });
        }
        if !checkpoint.tally.is_ordered() {
            return Err(CheckpointError::Tally);
        }
        Ok(checkpoint)
    }

    /// Writes the file atomically: a sibling temporary file is renamed over
    /// `path`, so an interrupted save leaves the previous checkpoint intact.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io_err = |source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        fs::write(&tmp, self.to_text()).map_err(io_err)?;
        fs::rename(&tmp, path).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

pub fn checkpoint_save(state: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    state.save(path)
}

pub fn checkpoint_load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    Checkpoint::load(path)
}
