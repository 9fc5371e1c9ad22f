//! Unsupervised sketch encoder: a dense autoencoder over rasterized sketches
//! whose bottleneck is the 32-dimensional sketch latent space.

use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latent::{SketchLatent, SKETCH_LATENT_DIM};
use crate::nn::{Activation, Adam, AdamConfig, Gradients, LayerDoc, Network};
use crate::sketch::Raster;

pub const DEFAULT_LAYER_DIMS: [usize; 5] = [4096, 256, 32, 256, 4096];
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AutoencoderError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(String),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(&'static str),
    #[error("training diverged at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("unsupported checkpoint format_version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed checkpoint: {0}")]
    MalformedDocument(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 16,
            seed: 0,
            init_scale: 0.05,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<(), AutoencoderError> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(AutoencoderError::InvalidHyperparams("learning_rate must be > 0"));
        }
        if self.epochs == 0 {
            return Err(AutoencoderError::InvalidHyperparams("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(AutoencoderError::InvalidHyperparams("batch_size must be >= 1"));
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return Err(AutoencoderError::InvalidHyperparams("init_scale must be >= 0"));
        }
        Ok(())
    }
}

/// A symmetric dense autoencoder. The middle entry of `layer_dims` is the
/// bottleneck; layers before it form the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    net: Network,
    bottleneck_layer: usize,
}

/// Default activations: tanh everywhere except a sigmoid output layer.
pub fn default_activations(layers: usize) -> Vec<Activation> {
    let mut acts = vec![Activation::Tanh; layers];
    if let Some(last) = acts.last_mut() {
        *last = Activation::Sigmoid;
    }
    acts
}

fn check_architecture(dims: &[usize], activations: &[Activation]) -> Result<usize, AutoencoderError> {
    if dims.len() < 3 || dims.len() % 2 == 0 {
        return Err(AutoencoderError::InvalidArchitecture(format!(
            "need an odd number (>= 3) of layer sizes, got {dims:?}"
        )));
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(AutoencoderError::InvalidArchitecture("zero-width layer".into()));
    }
    if dims.first() != dims.last() {
        return Err(AutoencoderError::InvalidArchitecture(
            "input and output widths differ".into(),
        ));
    }
    if activations.len() != dims.len() - 1 {
        return Err(AutoencoderError::InvalidArchitecture(format!(
            "{} activations for {} layers",
            activations.len(),
            dims.len() - 1
        )));
    }
    let bottleneck = dims.len() / 2;
    if matches!(activations[bottleneck - 1], Activation::Identity)
        || matches!(activations.last(), Some(Activation::Identity))
    {
        return Err(AutoencoderError::InvalidArchitecture(
            "bottleneck and output activations must be bounded".into(),
        ));
    }
    Ok(bottleneck)
}

impl AutoencoderModel {
    /// Seeded random initialization with the default activations.
    pub fn new(layer_dims: &[usize], init_scale: f64, seed: u64) -> Result<Self, AutoencoderError> {
        let acts = default_activations(layer_dims.len().saturating_sub(1));
        Self::with_activations(layer_dims, &acts, init_scale, seed)
    }

    pub fn with_activations(
        layer_dims: &[usize],
        activations: &[Activation],
        init_scale: f64,
        seed: u64,
    ) -> Result<Self, AutoencoderError> {
        let bottleneck_layer = check_architecture(layer_dims, activations)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(layer_dims, activations, init_scale, &mut rng);
        Ok(Self {
            net,
            bottleneck_layer,
        })
    }

    pub fn from_network(net: Network) -> Result<Self, AutoencoderError> {
        let bottleneck_layer = check_architecture(&net.layer_dims(), &net.activations())?;
        if !net.all_finite() {
            return Err(AutoencoderError::MalformedDocument("non-finite parameter".into()));
        }
        Ok(Self {
            net,
            bottleneck_layer,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.net.layer_dims()
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.net.layers[self.bottleneck_layer - 1].outputs()
    }

    /// Side length of the square rasters this model accepts, if the input
    /// width is a perfect square.
    pub fn raster_resolution(&self) -> Option<usize> {
        let n = self.input_dim();
        let r = (n as f64).sqrt().round() as usize;
        (r * r == n).then_some(r)
    }

    fn check_raster(&self, raster: &Raster) -> Result<(), AutoencoderError> {
        if raster.pixels().len() != self.input_dim() {
            return Err(AutoencoderError::DimensionMismatch {
                expected: self.input_dim(),
                actual: raster.pixels().len(),
            });
        }
        Ok(())
    }

    /// Bottleneck activations for an arbitrary-width model.
    pub fn encode_raw(&self, raster: &Raster) -> Result<Vec<f64>, AutoencoderError> {
        self.check_raster(raster)?;
        let x = ArrayView2::from_shape((1, raster.pixels().len()), raster.pixels())
            .expect("shape checked");
        let z = self.net.forward_range(x, 0..self.bottleneck_layer);
        Ok(z.into_raw_vec_and_offset().0)
    }

    pub fn encode(&self, raster: &Raster) -> Result<SketchLatent, AutoencoderError> {
        if self.bottleneck_dim() != SKETCH_LATENT_DIM {
            return Err(AutoencoderError::DimensionMismatch {
                expected: SKETCH_LATENT_DIM,
                actual: self.bottleneck_dim(),
            });
        }
        let z = self.encode_raw(raster)?;
        // tanh keeps values in [-1, 1]; clamping only guards rounding at the edges
        SketchLatent::clamped(&z).map_err(|e| AutoencoderError::MalformedDocument(e.to_string()))
    }

    pub fn decode_raw(&self, z: &[f64]) -> Result<Vec<f64>, AutoencoderError> {
        if z.len() != self.bottleneck_dim() {
            return Err(AutoencoderError::DimensionMismatch {
                expected: self.bottleneck_dim(),
                actual: z.len(),
            });
        }
        let x = ArrayView2::from_shape((1, z.len()), z).expect("shape checked");
        let out = self
            .net
            .forward_range(x, self.bottleneck_layer..self.net.layers.len());
        Ok(out.into_raw_vec_and_offset().0)
    }

    pub fn decode(&self, z: &SketchLatent) -> Result<Raster, AutoencoderError> {
        let pixels = self.decode_raw(z.as_slice())?;
        let resolution = self
            .raster_resolution()
            .ok_or_else(|| AutoencoderError::InvalidArchitecture("output is not square".into()))?;
        let pixels = pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Raster::from_pixels(resolution, pixels)
            .map_err(|e| AutoencoderError::MalformedDocument(e.to_string()))
    }

    pub fn reconstruct(&self, raster: &Raster) -> Result<Raster, AutoencoderError> {
        self.check_raster(raster)?;
        let z = self.encode_raw(raster)?;
        let pixels = self.decode_raw(&z)?;
        Raster::from_pixels(raster.resolution(), pixels.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
            .map_err(|e| AutoencoderError::MalformedDocument(e.to_string()))
    }

    fn batch_matrix(&self, batch: &[&Raster]) -> Result<Array2<f64>, AutoencoderError> {
        let dim = self.input_dim();
        let mut m = Array2::zeros((batch.len(), dim));
        for (mut row, r) in m.rows_mut().into_iter().zip(batch) {
            self.check_raster(r)?;
            row.assign(&ndarray::ArrayView1::from(r.pixels()));
        }
        Ok(m)
    }

    /// Mean squared reconstruction error over a batch.
    pub fn reconstruction_loss(&self, batch: &[Raster]) -> Result<f64, AutoencoderError> {
        if batch.is_empty() {
            return Err(AutoencoderError::EmptyCorpus);
        }
        let refs: Vec<&Raster> = batch.iter().collect();
        let x = self.batch_matrix(&refs)?;
        Ok(self.net.loss(x.view(), x.view()))
    }

    /// Exact gradients of the batch mean squared reconstruction error.
    pub fn compute_gradients(&self, batch: &[Raster]) -> Result<Gradients, AutoencoderError> {
        if batch.is_empty() {
            return Err(AutoencoderError::EmptyCorpus);
        }
        let refs: Vec<&Raster> = batch.iter().collect();
        let x = self.batch_matrix(&refs)?;
        Ok(self.net.loss_and_gradients(x.view(), x.view()).1)
    }
}

/// Trains a freshly initialized model with the default architecture for the
/// corpus resolution.
pub fn train_autoencoder(
    corpus: &[Raster],
    hp: &Hyperparams,
) -> Result<(AutoencoderModel, Vec<f64>), AutoencoderError> {
    let first = corpus.first().ok_or(AutoencoderError::EmptyCorpus)?;
    let r = first.resolution();
    let mut dims = DEFAULT_LAYER_DIMS;
    dims[0] = r * r;
    dims[4] = r * r;
    let model = AutoencoderModel::new(&dims, hp.init_scale, hp.seed)?;
    train_model(model, corpus, hp)
}

/// Mini-batch Adam on mean squared reconstruction error. Returns the trained
/// model and the mean loss of each epoch.
pub fn train_model(
    mut model: AutoencoderModel,
    corpus: &[Raster],
    hp: &Hyperparams,
) -> Result<(AutoencoderModel, Vec<f64>), AutoencoderError> {
    hp.validate()?;
    if corpus.is_empty() {
        return Err(AutoencoderError::EmptyCorpus);
    }
    for r in corpus {
        model.check_raster(r)?;
    }

    // Weight init consumed the seed's first stream; shuffling gets its own.
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed ^ 0x5348_5546_464c_4531);
    let mut adam = Adam::new(
        &model.net,
        AdamConfig {
            learning_rate: hp.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut history = Vec::with_capacity(hp.epochs);
    let mut grads = Gradients::zeros_like(&model.net);

    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(hp.batch_size) {
            let refs: Vec<&Raster> = chunk.iter().map(|&i| &corpus[i]).collect();
            let x = model.batch_matrix(&refs)?;
            let loss = model.net.loss_and_gradients_into(x.view(), x.view(), &mut grads);
            if !loss.is_finite() {
                return Err(AutoencoderError::NonFiniteLoss(epoch));
            }
            adam.step(&mut model.net, &grads);
            total += loss * chunk.len() as f64;
        }
        let mean = total / corpus.len() as f64;
        if !mean.is_finite() || !model.net.all_finite() {
            return Err(AutoencoderError::NonFiniteLoss(epoch));
        }
        history.push(mean);
    }
    Ok((model, history))
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
    layers: Vec<LayerDoc>,
}

pub fn checkpoint_to_json(model: &AutoencoderModel) -> String {
    let doc = CheckpointDoc {
        format_version: CHECKPOINT_FORMAT_VERSION,
        layer_dims: model.layer_dims(),
        activations: model.net.activations(),
        layers: model.net.to_layer_docs(),
    };
    serde_json::to_string(&doc).expect("checkpoint serializes")
}

pub fn checkpoint_from_json(text: &str) -> Result<AutoencoderModel, AutoencoderError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| AutoencoderError::MalformedDocument(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| AutoencoderError::MalformedDocument("missing format_version".into()))?;
    if version != u64::from(CHECKPOINT_FORMAT_VERSION) {
        return Err(AutoencoderError::UnsupportedVersion(version as u32));
    }
    let doc: CheckpointDoc =
        serde_json::from_value(value).map_err(|e| AutoencoderError::MalformedDocument(e.to_string()))?;
    let net = Network::from_layer_docs(&doc.layer_dims, &doc.activations, doc.layers)
        .map_err(AutoencoderError::MalformedDocument)?;
    AutoencoderModel::from_network(net)
}

pub fn save_checkpoint(model: &AutoencoderModel, path: &Path) -> Result<(), AutoencoderError> {
    std::fs::write(path, checkpoint_to_json(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<AutoencoderModel, AutoencoderError> {
    checkpoint_from_json(&std::fs::read_to_string(path)?)
}
