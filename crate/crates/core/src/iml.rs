//! Interactive machine learning: user-recorded (sketch latent, audio latent)
//! pairs and the regressors trained on them.
//!
//! Two mappers are available. `KnnIdw` interpolates the k nearest stored
//! examples with inverse-distance weights and reproduces stored targets
//! exactly; `Mlp` fits a small tanh network for smoother interpolation.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latent::{AudioLatent, LatentError, SketchLatent, AUDIO_LATENT_DIM, SKETCH_LATENT_DIM};
use crate::nn::{Activation, Adam, AdamConfig, LayerDoc, Network};

pub const MAPPER_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ImlError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid latent: {0}")]
    InvalidLatent(LatentError),
    #[error("the example store is empty")]
    EmptyStore,
    #[error("invalid mapper configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("unsupported format_version {0}")]
    UnsupportedVersion(u64),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<LatentError> for ImlError {
    fn from(e: LatentError) -> Self {
        match e {
            LatentError::DimensionMismatch { expected, actual } => {
                ImlError::DimensionMismatch { expected, actual }
            }
            other => ImlError::InvalidLatent(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub input: SketchLatent,
    pub target: AudioLatent,
    pub created_at: DateTime<Utc>,
}

impl TrainingExample {
    pub fn new(input: SketchLatent, target: AudioLatent, created_at: DateTime<Utc>) -> Self {
        Self {
            input,
            target,
            created_at,
        }
    }

    /// Validating constructor from raw slices.
    pub fn from_slices(
        input: &[f64],
        target: &[f64],
        created_at: DateTime<Utc>,
    ) -> Result<Self, ImlError> {
        Ok(Self {
            input: SketchLatent::from_slice(input)?,
            target: AudioLatent::from_slice(target)?,
            created_at,
        })
    }
}

/// Append-only list of recorded examples, clearable as a whole.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleStore {
    examples: Vec<TrainingExample>,
}

impl ExampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_example(&mut self, ex: TrainingExample) {
        self.examples.push(ex);
    }

    pub fn add_raw(
        &mut self,
        input: &[f64],
        target: &[f64],
        created_at: DateTime<Utc>,
    ) -> Result<(), ImlError> {
        self.add_example(TrainingExample::from_slices(input, target, created_at)?);
        Ok(())
    }

    pub fn clear(&mut self) {
        self.examples.clear();
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    /// Writes one JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), ImlError> {
        for ex in &self.examples {
            serde_json::to_writer(&mut w, ex).map_err(|e| ImlError::MalformedDocument(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self, ImlError> {
        let mut store = Self::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ex: TrainingExample = serde_json::from_str(&line)
                .map_err(|e| ImlError::MalformedDocument(format!("line {}: {e}", n + 1)))?;
            store.add_example(ex);
        }
        Ok(store)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), ImlError> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path) -> Result<Self, ImlError> {
        Self::read_jsonl(BufReader::new(fs::File::open(path)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapperVariant {
    KnnIdw,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapperConfig {
    pub variant: MapperVariant,
    pub k: usize,
    pub power: f64,
    pub epsilon: f64,
    /// MLP training stops once full-batch MSE is at or below this.
    pub target_loss: f64,
    pub max_iters: usize,
    pub learning_rate: f64,
    pub hidden: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            variant: MapperVariant::KnnIdw,
            k: 4,
            power: 2.0,
            epsilon: 1e-9,
            target_loss: 1e-4,
            max_iters: 2000,
            learning_rate: 1e-2,
            hidden: 64,
            init_scale: 0.2,
            seed: 0,
        }
    }
}

impl MapperConfig {
    fn validate(&self) -> Result<(), ImlError> {
        match self.variant {
            MapperVariant::KnnIdw => {
                if self.k == 0 {
                    return Err(ImlError::InvalidConfig("k must be >= 1"));
                }
                if !(self.power > 0.0) || !self.power.is_finite() {
                    return Err(ImlError::InvalidConfig("power must be > 0"));
                }
                if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
                    return Err(ImlError::InvalidConfig("epsilon must be > 0"));
                }
            }
            MapperVariant::Mlp => {
                if self.max_iters == 0 {
                    return Err(ImlError::InvalidConfig("max_iters must be >= 1"));
                }
                if !(self.learning_rate > 0.0) {
                    return Err(ImlError::InvalidConfig("learning_rate must be > 0"));
                }
                if self.hidden == 0 {
                    return Err(ImlError::InvalidConfig("hidden must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// k-nearest-neighbour regression with inverse distance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnIdw {
    pub k: usize,
    pub power: f64,
    pub epsilon: f64,
    examples: Vec<TrainingExample>,
}

impl KnnIdw {
    pub fn new(k: usize, power: f64, epsilon: f64, examples: Vec<TrainingExample>) -> Result<Self, ImlError> {
        if examples.is_empty() {
            return Err(ImlError::EmptyStore);
        }
        let cfg = MapperConfig {
            variant: MapperVariant::KnnIdw,
            k,
            power,
            epsilon,
            ..MapperConfig::default()
        };
        cfg.validate()?;
        Ok(Self {
            k,
            power,
            epsilon,
            examples,
        })
    }

    pub fn examples(&self) -> &[TrainingExample] {
        &self.examples
    }

    /// Unclamped interpolation; see [`MapperModel::map`].
    pub fn interpolate(&self, z: &SketchLatent) -> [f64; AUDIO_LATENT_DIM] {
        let distances: Vec<f64> = self.examples.iter().map(|ex| ex.input.distance(z)).collect();

        let mut out = [0.0; AUDIO_LATENT_DIM];
        let exact: Vec<usize> = (0..distances.len())
            .filter(|&i| distances[i] < self.epsilon)
            .collect();
        if !exact.is_empty() {
            for &i in &exact {
                for (o, t) in out.iter_mut().zip(self.examples[i].target.values()) {
                    *o += t;
                }
            }
            let n = exact.len() as f64;
            out.iter_mut().for_each(|o| *o /= n);
            return out;
        }

        let mut order: Vec<usize> = (0..distances.len()).collect();
        // stable: equal distances keep store order
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]));
        let mut weight_sum = 0.0;
        for &i in order.iter().take(self.k) {
            let w = distances[i].powf(self.power).recip();
            weight_sum += w;
            for (o, t) in out.iter_mut().zip(self.examples[i].target.values()) {
                *o += w * t;
            }
        }
        out.iter_mut().for_each(|o| *o /= weight_sum);
        out
    }
}

/// Two-layer tanh network from sketch latent to audio latent.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpMapper {
    net: Network,
}

impl MlpMapper {
    pub fn network(&self) -> &Network {
        &self.net
    }

    fn from_network(net: Network) -> Result<Self, ImlError> {
        let dims = net.layer_dims();
        if dims.first() != Some(&SKETCH_LATENT_DIM) || dims.last() != Some(&AUDIO_LATENT_DIM) {
            return Err(ImlError::MalformedDocument(format!(
                "mlp must map {SKETCH_LATENT_DIM} -> {AUDIO_LATENT_DIM}, got {dims:?}"
            )));
        }
        if net.activations().last() != Some(&Activation::Tanh) {
            return Err(ImlError::MalformedDocument("mlp output activation must be tanh".into()));
        }
        Ok(Self { net })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MapperModel {
    KnnIdw(KnnIdw),
    Mlp(MlpMapper),
}

/// Outcome of a training run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainReport {
    /// Mean squared error of the trained mapper over the stored examples.
    pub loss: f64,
    pub iterations: usize,
}

fn store_matrices(examples: &[TrainingExample]) -> (Array2<f64>, Array2<f64>) {
    let n = examples.len();
    let mut x = Array2::zeros((n, SKETCH_LATENT_DIM));
    let mut y = Array2::zeros((n, AUDIO_LATENT_DIM));
    for (i, ex) in examples.iter().enumerate() {
        x.row_mut(i).assign(&ndarray::ArrayView1::from(ex.input.as_slice()));
        y.row_mut(i).assign(&ndarray::ArrayView1::from(ex.target.as_slice()));
    }
    (x, y)
}

pub fn train(store: &ExampleStore, config: &MapperConfig) -> Result<(MapperModel, TrainReport), ImlError> {
    if store.is_empty() {
        return Err(ImlError::EmptyStore);
    }
    config.validate()?;
    let model = match config.variant {
        MapperVariant::KnnIdw => {
            let knn = KnnIdw::new(config.k, config.power, config.epsilon, store.examples().to_vec())?;
            MapperModel::KnnIdw(knn)
        }
        MapperVariant::Mlp => {
            let (mapper, iterations) = train_mlp(store.examples(), config);
            let model = MapperModel::Mlp(mapper);
            let loss = model.training_loss(store.examples());
            return Ok((model, TrainReport { loss, iterations }));
        }
    };
    let loss = model.training_loss(store.examples());
    Ok((model, TrainReport { loss, iterations: 0 }))
}

fn train_mlp(examples: &[TrainingExample], config: &MapperConfig) -> (MlpMapper, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::new(
        &[SKETCH_LATENT_DIM, config.hidden, AUDIO_LATENT_DIM],
        &[Activation::Tanh, Activation::Tanh],
        config.init_scale,
        &mut rng,
    );
    let (x, y) = store_matrices(examples);
    let mut adam = Adam::new(
        &net,
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut iterations = 0;
    while iterations < config.max_iters {
        let (loss, grads) = net.loss_and_gradients(x.view(), y.view());
        if loss <= config.target_loss {
            break;
        }
        adam.step(&mut net, &grads);
        iterations += 1;
    }
    (MlpMapper { net }, iterations)
}

impl MapperModel {
    pub fn variant(&self) -> MapperVariant {
        match self {
            MapperModel::KnnIdw(_) => MapperVariant::KnnIdw,
            MapperModel::Mlp(_) => MapperVariant::Mlp,
        }
    }

    /// Maps a sketch latent onto the audio latent space. The output is always
    /// 16 finite values clamped to `[-1, 1]`.
    pub fn map(&self, z: &SketchLatent) -> AudioLatent {
        let raw = match self {
            MapperModel::KnnIdw(knn) => knn.interpolate(z),
            MapperModel::Mlp(mlp) => {
                let x = ndarray::ArrayView2::from_shape((1, SKETCH_LATENT_DIM), z.as_slice())
                    .expect("fixed shape");
                let out = mlp.net.forward(x);
                let mut v = [0.0; AUDIO_LATENT_DIM];
                v.iter_mut().zip(out.iter()).for_each(|(o, &y)| *o = y);
                v
            }
        };
        AudioLatent::clamped(&raw).unwrap_or_else(|_| AudioLatent::zeros())
    }

    pub fn map_slice(&self, z: &[f64]) -> Result<AudioLatent, ImlError> {
        Ok(self.map(&SketchLatent::from_slice(z)?))
    }

    /// Mean squared error of the mapper over the given examples.
    pub fn training_loss(&self, examples: &[TrainingExample]) -> f64 {
        if examples.is_empty() {
            return 0.0;
        }
        let total: f64 = examples
            .iter()
            .map(|ex| {
                let out = self.map(&ex.input);
                out.as_slice()
                    .iter()
                    .zip(ex.target.as_slice())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        total / (examples.len() * AUDIO_LATENT_DIM) as f64
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "variant", content = "payload", rename_all = "snake_case")]
enum MapperPayload {
    KnnIdw {
        k: usize,
        power: f64,
        epsilon: f64,
        examples: Vec<TrainingExample>,
    },
    Mlp {
        layer_dims: Vec<usize>,
        activations: Vec<Activation>,
        layers: Vec<LayerDoc>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct MapperDoc {
    format_version: u32,
    #[serde(flatten)]
    payload: MapperPayload,
}

pub fn save_mapper(model: &MapperModel) -> Vec<u8> {
    let payload = match model {
        MapperModel::KnnIdw(knn) => MapperPayload::KnnIdw {
            k: knn.k,
            power: knn.power,
            epsilon: knn.epsilon,
            examples: knn.examples.clone(),
        },
        MapperModel::Mlp(mlp) => MapperPayload::Mlp {
            layer_dims: mlp.net.layer_dims(),
            activations: mlp.net.activations(),
            layers: mlp.net.to_layer_docs(),
        },
    };
    let doc = MapperDoc {
        format_version: MAPPER_FORMAT_VERSION,
        payload,
    };
    serde_json::to_vec(&doc).expect("mapper serializes")
}

pub fn load_mapper(bytes: &[u8]) -> Result<MapperModel, ImlError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ImlError::MalformedDocument(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| ImlError::MalformedDocument("missing format_version".into()))?;
    if version != u64::from(MAPPER_FORMAT_VERSION) {
        return Err(ImlError::UnsupportedVersion(version));
    }
    let doc: MapperDoc =
        serde_json::from_value(value).map_err(|e| ImlError::MalformedDocument(e.to_string()))?;
    match doc.payload {
        MapperPayload::KnnIdw {
            k,
            power,
            epsilon,
            examples,
        } => KnnIdw::new(k, power, epsilon, examples)
            .map(MapperModel::KnnIdw)
            .map_err(|e| ImlError::MalformedDocument(e.to_string())),
        MapperPayload::Mlp {
            layer_dims,
            activations,
            layers,
        } => {
            let net = Network::from_layer_docs(&layer_dims, &activations, layers)
                .map_err(ImlError::MalformedDocument)?;
            MlpMapper::from_network(net).map(MapperModel::Mlp)
        }
    }
}
