//! Session files: a JSON manifest plus sidecars next to it.
//!
//! `<stem>.json` holds the latent, the generator state, the mapper settings
//! and file references; `<stem>.examples.jsonl` the example store,
//! `<stem>.mapper.json` the trained mapper (if any). The encoder is stored
//! by reference when its checkpoint path is known, otherwise it is written
//! to `<stem>.encoder.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LatentRng, SessionMode, SessionState};
use crate::autoencoder::{checkpoint_from_json, checkpoint_to_json, AutoencoderError};
use crate::iml::{load_mapper, save_mapper, ExampleStore, ImlError, MapperConfig};
use crate::latent::AudioLatent;
use crate::sketch::SketchFrame;

pub const SESSION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("I/O failure on {path}: {source}")]
    IoFailure {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed document {path}: {reason}")]
    MalformedDocument { path: PathBuf, reason: String },
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u64),
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    seed: u64,
    rng_state: u64,
    current_latent: AudioLatent,
    mapper_config: MapperConfig,
    examples: PathBuf,
    mapper: Option<PathBuf>,
    encoder: PathBuf,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::IoFailure {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, reason: impl ToString) -> SessionError {
    SessionError::MalformedDocument {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "session".into());
    PathBuf::from(format!("{stem}.{suffix}"))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), SessionError> {
    fs::write(path, bytes).map_err(io(path))
}

/// Writes the manifest at `path` and its sidecars in the same directory.
pub fn save_session(state: &SessionState, path: &Path) -> Result<(), SessionError> {
    let dir = path.parent().unwrap_or(Path::new(""));

    let examples = sidecar(path, "examples.jsonl");
    let mut buf = Vec::new();
    state
        .store
        .write_jsonl(&mut buf)
        .map_err(|e| malformed(&examples, e))?;
    write(&dir.join(&examples), &buf)?;

    let mapper = match &state.mapper {
        Some(m) => {
            let name = sidecar(path, "mapper.json");
            write(&dir.join(&name), &save_mapper(m))?;
            Some(name)
        }
        None => None,
    };

    let encoder = match &state.encoder_source {
        Some(p) => std::path::absolute(p).map_err(io(p))?,
        None => {
            let name = sidecar(path, "encoder.json");
            write(&dir.join(&name), checkpoint_to_json(&state.encoder).as_bytes())?;
            name
        }
    };

    let manifest = Manifest {
        format_version: SESSION_FORMAT_VERSION,
        seed: state.seed,
        rng_state: state.rng.state(),
        current_latent: state.current_latent,
        mapper_config: state.mapper_config.clone(),
        examples,
        mapper,
        encoder,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(path, text.as_bytes())
}

/// Restores an Idle session with an empty canvas.
pub fn load_session(path: &Path) -> Result<SessionState, SessionError> {
    let dir = path.parent().unwrap_or(Path::new(""));
    let text = fs::read_to_string(path).map_err(io(path))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| malformed(path, e))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| malformed(path, "missing format_version"))?;
    if version != u64::from(SESSION_FORMAT_VERSION) {
        return Err(SessionError::UnsupportedVersion(version));
    }
    let m: Manifest = serde_json::from_value(value).map_err(|e| malformed(path, e))?;

    let examples_path = dir.join(&m.examples);
    let bytes = fs::read(&examples_path).map_err(io(&examples_path))?;
    let store = ExampleStore::read_jsonl(&bytes[..]).map_err(|e| malformed(&examples_path, e))?;

    let mapper = match &m.mapper {
        Some(rel) => {
            let p = dir.join(rel);
            let bytes = fs::read(&p).map_err(io(&p))?;
            let model = load_mapper(&bytes).map_err(|e| match e {
                ImlError::UnsupportedVersion(v) => SessionError::UnsupportedVersion(v),
                other => malformed(&p, other),
            })?;
            Some(Arc::new(model))
        }
        None => None,
    };

    let encoder_path = dir.join(&m.encoder);
    let text = fs::read_to_string(&encoder_path).map_err(io(&encoder_path))?;
    let encoder = checkpoint_from_json(&text).map_err(|e| match e {
        AutoencoderError::UnsupportedVersion(v) => SessionError::UnsupportedVersion(v.into()),
        other => malformed(&encoder_path, other),
    })?;

    let mut state = SessionState::new(Arc::new(encoder), m.mapper_config, m.seed)
        .map_err(|e| malformed(&encoder_path, e))?;
    if m.encoder.is_absolute() {
        state.encoder_source = Some(m.encoder);
    }
    state.mode = SessionMode::Idle;
    state.current_latent = m.current_latent;
    state.store = store;
    state.mapper = mapper;
    state.rng = LatentRng::from_state(m.rng_state);
    state.frame = SketchFrame::new();
    Ok(state)
}
