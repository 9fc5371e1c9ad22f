use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::render::{render_in_place, AudioBlock, RenderError, SynthState};
use super::latent_to_params;
use crate::latent::AudioLatent;

/// Samples rendered between latent updates.
pub const SCRIPT_BLOCK: usize = 256;

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("duration must be positive and finite")]
    InvalidDuration,
    #[error("script point {0} has a negative or non-finite time")]
    InvalidTime(usize),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("malformed latent script: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A latent that takes effect at `t` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptPoint {
    pub t: f64,
    pub latent: AudioLatent,
}

/// Time-ordered latent changes, read from a JSON array of points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentScript {
    pub points: Vec<ScriptPoint>,
}

impl LatentScript {
    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let script: Self = serde_json::from_str(text)?;
        script.validate()?;
        Ok(script)
    }

    pub fn load(path: &Path) -> Result<Self, ScriptError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), ScriptError> {
        match self.points.iter().position(|p| !(p.t.is_finite() && p.t >= 0.0)) {
            Some(i) => Err(ScriptError::InvalidTime(i)),
            None => Ok(()),
        }
    }

    /// Latent in force at `t`: the last point (in order of time, then of
    /// appearance) with time at or before `t`, or silence.
    pub fn latent_at(&self, t: f64) -> AudioLatent {
        let mut best: Option<&ScriptPoint> = None;
        for p in &self.points {
            if p.t <= t && best.map_or(true, |b| p.t >= b.t) {
                best = Some(p);
            }
        }
        best.map_or_else(AudioLatent::zeros, |p| p.latent)
    }
}

/// Renders `duration` seconds, applying latent changes at block boundaries.
pub fn render_script(
    script: &LatentScript,
    duration: f64,
    sample_rate: u32,
    noise_seed: u64,
) -> Result<AudioBlock, ScriptError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ScriptError::InvalidDuration);
    }
    script.validate()?;
    let total = (duration * sample_rate as f64).round() as usize;
    if total == 0 {
        return Err(ScriptError::InvalidDuration);
    }
    let mut samples = vec![0.0; total];
    let mut state = SynthState::new(noise_seed);
    for (i, chunk) in samples.chunks_mut(SCRIPT_BLOCK).enumerate() {
        let t = (i * SCRIPT_BLOCK) as f64 / sample_rate as f64;
        let params = latent_to_params(&script.latent_at(t));
        render_in_place(&mut state, &params, chunk, sample_rate)?;
    }
    Ok(AudioBlock {
        sample_rate,
        samples,
    })
}
