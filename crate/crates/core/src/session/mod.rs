//! The record / train / run workflow as a pure state machine.
//!
//! [`handle_command`] and [`handle_sketch_event`] take a state and one input
//! and return the next state together with the effects the caller must carry
//! out (notify the synth, broadcast a snapshot, persist). Nothing here
//! performs I/O, so a logged input sequence replays to the same final state.

mod config;
mod persist;

pub use config::{BackendKind, ConfigError, OscOutConfig, SessionConfig};
pub use persist::{load_session, save_session, SessionError, SESSION_FORMAT_VERSION};

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::autoencoder::{AutoencoderError, AutoencoderModel};
use crate::iml::{train, ExampleStore, MapperConfig, MapperModel, TrainingExample};
use crate::latent::{AudioLatent, SketchLatent, AUDIO_LATENT_DIM};
pub use crate::rng::{randomize_latent, LatentRng};
use crate::sketch::{rasterize, Point, SketchFrame, Stroke};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Idle,
    Recording,
    Training,
    Running,
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionMode::Idle => "idle",
            SessionMode::Recording => "recording",
            SessionMode::Training => "training",
            SessionMode::Running => "running",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Record,
    StopRecord,
    Randomise,
    SetLatentDim { dim: usize, value: f64 },
    Train,
    Run,
    Stop,
    Clear,
    Save { path: PathBuf },
    Load { path: PathBuf },
}

/// Canvas input. Coordinates are normalized to the unit square; times are
/// in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SketchEvent {
    StrokeBegin { x: f64, y: f64, t: f64 },
    StrokePoint { x: f64, y: f64, t: f64 },
    StrokeEnd { t: f64 },
    CanvasClear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentSource {
    Manual,
    Randomise,
    Sketch,
    Load,
}

/// What a UI needs to mirror the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub mode: SessionMode,
    pub latent: AudioLatent,
    pub example_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Snapshot(Snapshot),
    LatentUpdate { latent: AudioLatent, source: LatentSource },
    ExampleAdded { count: usize },
    Rejected { reason: String },
    Error { message: String },
    /// The state entered Training; [`finish_training`] resolves it.
    TrainMapper,
    Trained { loss: f64 },
    SaveSession { path: PathBuf },
    LoadSession { path: PathBuf },
}

impl Effect {
    fn rejected(reason: impl Into<String>) -> Self {
        Effect::Rejected {
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub mode: SessionMode,
    pub current_latent: AudioLatent,
    pub store: ExampleStore,
    pub encoder: Arc<AutoencoderModel>,
    /// Where the encoder was loaded from, kept so saves can reference it.
    pub encoder_source: Option<PathBuf>,
    pub mapper: Option<Arc<MapperModel>>,
    pub mapper_config: MapperConfig,
    pub seed: u64,
    pub rng: LatentRng,
    pub frame: SketchFrame,
    pub stroke_open: bool,
    resolution: usize,
}

impl SessionState {
    /// Fresh Idle session. The encoder's input must be a square raster and
    /// its bottleneck the sketch latent width.
    pub fn new(
        encoder: Arc<AutoencoderModel>,
        mapper_config: MapperConfig,
        seed: u64,
    ) -> Result<Self, AutoencoderError> {
        let resolution = check_encoder(&encoder)?;
        Ok(Self {
            mode: SessionMode::Idle,
            current_latent: AudioLatent::zeros(),
            store: ExampleStore::new(),
            encoder,
            encoder_source: None,
            mapper: None,
            mapper_config,
            seed,
            rng: LatentRng::new(seed),
            frame: SketchFrame::new(),
            stroke_open: false,
            resolution,
        })
    }

    pub fn with_encoder_source(mut self, path: impl Into<PathBuf>) -> Self {
        self.encoder_source = Some(path.into());
        self
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            mode: self.mode,
            latent: self.current_latent,
            example_count: self.store.len(),
        }
    }

    fn snapshot_effect(&self) -> Effect {
        Effect::Snapshot(self.snapshot())
    }
}

fn check_encoder(encoder: &AutoencoderModel) -> Result<usize, AutoencoderError> {
    let resolution = encoder.raster_resolution().ok_or_else(|| {
        AutoencoderError::InvalidArchitecture("encoder input is not a square raster".into())
    })?;
    if encoder.bottleneck_dim() != crate::SKETCH_LATENT_DIM {
        return Err(AutoencoderError::DimensionMismatch {
            expected: crate::SKETCH_LATENT_DIM,
            actual: encoder.bottleneck_dim(),
        });
    }
    Ok(resolution)
}

/// Rasterize at the encoder's resolution and encode.
pub fn encode_frame(
    encoder: &AutoencoderModel,
    frame: &SketchFrame,
) -> Result<SketchLatent, AutoencoderError> {
    let resolution = check_encoder(encoder)?;
    let raster = rasterize(frame, resolution)
        .map_err(|e| AutoencoderError::InvalidArchitecture(e.to_string()))?;
    encoder.encode(&raster)
}

pub fn handle_command(state: SessionState, cmd: Command) -> (SessionState, Vec<Effect>) {
    use SessionMode::*;
    let mut s = state;
    if s.mode == Training && !matches!(cmd, Command::Randomise | Command::SetLatentDim { .. }) {
        return (s, vec![Effect::rejected("training in progress")]);
    }
    let effects = match (s.mode, cmd) {
        (Idle, Command::Record) => {
            s.mode = Recording;
            vec![s.snapshot_effect()]
        }
        (Recording, Command::StopRecord) => {
            s.mode = Idle;
            vec![s.snapshot_effect()]
        }
        (_, Command::Randomise) => {
            let (z, rng) = randomize_latent(s.rng);
            s.rng = rng;
            s.current_latent = z;
            vec![
                Effect::LatentUpdate {
                    latent: z,
                    source: LatentSource::Randomise,
                },
                s.snapshot_effect(),
            ]
        }
        (_, Command::SetLatentDim { dim, value }) => {
            if dim >= AUDIO_LATENT_DIM {
                vec![Effect::rejected(format!("latent dimension {dim} out of range"))]
            } else if !(-1.0..=1.0).contains(&value) {
                vec![Effect::rejected(format!("latent value {value} outside [-1, 1]"))]
            } else {
                let z = s
                    .current_latent
                    .with_dim(dim, value)
                    .expect("dimension and value checked");
                s.current_latent = z;
                vec![
                    Effect::LatentUpdate {
                        latent: z,
                        source: LatentSource::Manual,
                    },
                    s.snapshot_effect(),
                ]
            }
        }
        (Idle, Command::Train) => {
            s.mode = Training;
            vec![s.snapshot_effect(), Effect::TrainMapper]
        }
        (Idle, Command::Run) => {
            if s.mapper.is_some() {
                s.mode = Running;
                vec![s.snapshot_effect()]
            } else {
                vec![Effect::rejected("no mapper")]
            }
        }
        (Running, Command::Stop) => {
            s.mode = Idle;
            vec![s.snapshot_effect()]
        }
        (Idle | Recording, Command::Clear) => {
            s.store.clear();
            s.mapper = None;
            s.frame = SketchFrame::new();
            s.stroke_open = false;
            vec![s.snapshot_effect()]
        }
        (Idle | Recording | Running, Command::Save { path }) => vec![Effect::SaveSession { path }],
        (Idle, Command::Load { path }) => vec![Effect::LoadSession { path }],
        (mode, cmd) => vec![Effect::rejected(format!(
            "{} not allowed while {mode}",
            command_name(&cmd)
        ))],
    };
    (s, effects)
}

pub fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Record => "record",
        Command::StopRecord => "stop_record",
        Command::Randomise => "randomise",
        Command::SetLatentDim { .. } => "set_latent",
        Command::Train => "train",
        Command::Run => "run",
        Command::Stop => "stop",
        Command::Clear => "clear",
        Command::Save { .. } => "save",
        Command::Load { .. } => "load",
    }
}

/// Fits the mapper on the current store and leaves Training for Idle,
/// whatever the outcome. A no-op outside Training.
pub fn finish_training(state: SessionState) -> (SessionState, Vec<Effect>) {
    let mut s = state;
    if s.mode != SessionMode::Training {
        return (s, Vec::new());
    }
    s.mode = SessionMode::Idle;
    let outcome = train(&s.store, &s.mapper_config);
    let first = match outcome {
        Ok((model, report)) => {
            s.mapper = Some(Arc::new(model));
            Effect::Trained { loss: report.loss }
        }
        Err(e) => Effect::Error {
            message: format!("training failed: {e}"),
        },
    };
    let snap = s.snapshot_effect();
    (s, vec![first, snap])
}

fn valid_point(x: f64, y: f64, t: f64) -> bool {
    x.is_finite() && y.is_finite() && t.is_finite()
}

/// Applies one canvas event. `now` stamps any example recorded.
pub fn handle_sketch_event(
    state: SessionState,
    ev: SketchEvent,
    now: DateTime<Utc>,
) -> (SessionState, Vec<Effect>) {
    let mut s = state;
    let effects = match ev {
        SketchEvent::StrokeBegin { x, y, t } => {
            if !valid_point(x, y, t) {
                vec![Effect::rejected("non-finite stroke coordinates")]
            } else if s.stroke_open {
                vec![Effect::rejected("stroke already open")]
            } else {
                let mut stroke = Stroke::new();
                stroke.push(Point::new(x, y, t));
                s.frame.strokes.push(stroke);
                s.stroke_open = true;
                Vec::new()
            }
        }
        SketchEvent::StrokePoint { x, y, t } => {
            if !valid_point(x, y, t) {
                vec![Effect::rejected("non-finite stroke coordinates")]
            } else if !s.stroke_open {
                vec![Effect::rejected("no open stroke")]
            } else {
                s.frame
                    .strokes
                    .last_mut()
                    .expect("an open stroke exists")
                    .push(Point::new(x, y, t));
                Vec::new()
            }
        }
        SketchEvent::StrokeEnd { t } => {
            if !t.is_finite() {
                vec![Effect::rejected("non-finite stroke time")]
            } else if !s.stroke_open {
                vec![Effect::rejected("no open stroke")]
            } else {
                s.stroke_open = false;
                return stroke_completed(s, now);
            }
        }
        SketchEvent::CanvasClear => {
            s.frame = SketchFrame::new();
            s.stroke_open = false;
            Vec::new()
        }
    };
    (s, effects)
}

fn stroke_completed(state: SessionState, now: DateTime<Utc>) -> (SessionState, Vec<Effect>) {
    let mut s = state;
    let effects = match s.mode {
        SessionMode::Recording => match encode_frame(&s.encoder, &s.frame) {
            Ok(z) => {
                s.store
                    .add_example(TrainingExample::new(z, s.current_latent, now));
                vec![
                    Effect::ExampleAdded {
                        count: s.store.len(),
                    },
                    s.snapshot_effect(),
                ]
            }
            Err(e) => vec![Effect::Error {
                message: format!("encoding failed: {e}"),
            }],
        },
        SessionMode::Running => {
            let mapper = s.mapper.as_ref().expect("running implies a mapper");
            match encode_frame(&s.encoder, &s.frame) {
                Ok(z) => {
                    let latent = mapper.map(&z);
                    s.current_latent = latent;
                    vec![
                        Effect::LatentUpdate {
                            latent,
                            source: LatentSource::Sketch,
                        },
                        s.snapshot_effect(),
                    ]
                }
                Err(e) => vec![Effect::Error {
                    message: format!("encoding failed: {e}"),
                }],
            }
        }
        SessionMode::Idle | SessionMode::Training => Vec::new(),
    };
    (s, effects)
}

/// One entry of an input log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Input {
    Command(Command),
    Sketch {
        event: SketchEvent,
        at: DateTime<Utc>,
    },
}

/// Applies one input and, if it started training, resolves training too.
/// Save and load requests come back as effects for the caller.
pub fn step(state: SessionState, input: Input) -> (SessionState, Vec<Effect>) {
    let (s, mut effects) = match input {
        Input::Command(cmd) => handle_command(state, cmd),
        Input::Sketch { event, at } => handle_sketch_event(state, event, at),
    };
    if effects.contains(&Effect::TrainMapper) {
        let (s, more) = finish_training(s);
        effects.extend(more);
        return (s, effects);
    }
    (s, effects)
}

pub fn replay(state: SessionState, inputs: &[Input]) -> SessionState {
    inputs
        .iter()
        .cloned()
        .fold(state, |s, input| step(s, input).0)
}
