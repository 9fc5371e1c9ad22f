//! Fully connected networks with analytic backpropagation and Adam.
//!
//! Shared by the sketch autoencoder and the MLP mapper. All arithmetic is
//! `f64` and single-threaded so that seeded runs reproduce bit-for-bit.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `outputs × inputs`, row-major.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weights.t());
        let act = self.activation;
        Zip::from(z.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row)
                .and(&self.bias)
                .for_each(|v, &b| *v = act.apply(*v + b));
        });
        z
    }
}

/// Per-parameter gradients (or optimizer moments), shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    /// All values, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        out
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Dense>,
}

impl Network {
    /// Builds a network with `dims.len() - 1` layers; `activations` must have
    /// one entry per layer. Weights are uniform in `±init_scale`, biases zero.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        init_scale: f64,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "a network needs at least two layer sizes");
        assert_eq!(activations.len(), dims.len() - 1);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| {
                let mut layer = Dense::zeros(d[0], d[1], act);
                if init_scale > 0.0 {
                    layer
                        .weights
                        .mapv_inplace(|_| rng.gen_range(-init_scale..=init_scale));
                }
                layer
            })
            .collect();
        Self { layers }
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].inputs()];
        dims.extend(self.layers.iter().map(Dense::outputs));
        dims
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Dense::outputs).unwrap_or(0)
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }

    /// Forward pass through `layers[range]` for a batch (one row per sample).
    pub fn forward_range(&self, x: ArrayView2<f64>, range: std::ops::Range<usize>) -> Array2<f64> {
        let mut a = x.to_owned();
        for layer in &self.layers[range] {
            a = layer.forward(a.view());
        }
        a
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward_range(x, 0..self.layers.len())
    }

    /// Mean squared error over all batch elements and output dimensions.
    pub fn loss(&self, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> f64 {
        mse(self.forward(inputs).view(), targets)
    }

    /// Loss and exact gradients of the mean squared error
    /// `1/(B·D) Σ (ŷ − y)²` with respect to every weight and bias.
    pub fn loss_and_gradients(
        &self,
        inputs: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> (f64, Gradients) {
        let mut grads = Gradients::zeros_like(self);
        let loss = self.loss_and_gradients_into(inputs, targets, &mut grads);
        (loss, grads)
    }

    /// [`Self::loss_and_gradients`] writing into a reused buffer shaped like
    /// the network.
    pub fn loss_and_gradients_into(
        &self,
        inputs: ArrayView2<f64>,
        targets: ArrayView2<f64>,
        grads: &mut Gradients,
    ) -> f64 {
        assert_eq!(inputs.ncols(), self.input_dim());
        assert_eq!(targets.ncols(), self.output_dim());
        assert_eq!(inputs.nrows(), targets.nrows());

        // activations[0] is the input, activations[i+1] the output of layer i
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_owned());
        for layer in &self.layers {
            let next = layer.forward(activations.last().expect("non-empty").view());
            activations.push(next);
        }
        let output = activations.last().expect("non-empty");
        let loss = mse(output.view(), targets);

        let scale = 2.0 / output.len() as f64;
        let mut delta = (output - &targets) * scale;

        for (i, layer) in self.layers.iter().enumerate().rev() {
            let act = layer.activation;
            Zip::from(&mut delta)
                .and(&activations[i + 1])
                .for_each(|d, &a| *d *= act.derivative_from_output(a));
            general_mat_mul(1.0, &delta.t(), &activations[i], 0.0, &mut grads.weights[i]);
            grads.biases[i].assign(&delta.sum_axis(Axis(0)));
            if i > 0 {
                delta = delta.dot(&layer.weights);
            }
        }
        loss
    }

    /// Flattened parameters in the same order as [`Gradients::flatten`].
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out
    }

    /// Mutable access to the `index`-th parameter in flattened order.
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                let cols = l.weights.ncols();
                return &mut l.weights[(index / cols, index % cols)];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Serialized form of one dense layer: row-major `outputs × inputs` weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct LayerDoc {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Network {
    pub(crate) fn to_layer_docs(&self) -> Vec<LayerDoc> {
        self.layers
            .iter()
            .map(|l| LayerDoc {
                weights: l.weights.iter().copied().collect(),
                bias: l.bias.to_vec(),
            })
            .collect()
    }

    /// Rebuilds a network from its documented shape; `Err` carries a reason.
    pub(crate) fn from_layer_docs(
        layer_dims: &[usize],
        activations: &[Activation],
        layers: Vec<LayerDoc>,
    ) -> Result<Self, String> {
        if layer_dims.len() != layers.len() + 1 || activations.len() != layers.len() {
            return Err("layer count mismatch".into());
        }
        let layers = layers
            .into_iter()
            .zip(layer_dims.windows(2))
            .zip(activations)
            .map(|((l, d), &activation)| {
                let weights =
                    Array2::from_shape_vec((d[1], d[0]), l.weights).map_err(|e| e.to_string())?;
                if l.bias.len() != d[1] {
                    return Err("bias length mismatch".to_string());
                }
                if weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                    return Err("non-finite parameter".to_string());
                }
                Ok(Dense {
                    weights,
                    bias: Array1::from(l.bias),
                    activation,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { layers })
    }
}

pub fn mse(output: ArrayView2<f64>, targets: ArrayView2<f64>) -> f64 {
    let n = output.len() as f64;
    Zip::from(&output)
        .and(&targets)
        .fold(0.0, |acc, &o, &t| acc + (o - t) * (o - t))
        / n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam optimizer state for one network.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: i32,
    m: Gradients,
    v: Gradients,
}

impl Adam {
    pub fn new(net: &Network, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients) {
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let inv_c1 = 1.0 / (1.0 - beta1.powi(self.step));
        let inv_c2 = 1.0 / (1.0 - beta2.powi(self.step));
        let update = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for (((p, m), v), &g) in p.iter_mut().zip(m).zip(v).zip(g) {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *p -= learning_rate * (*m * inv_c1) / ((*v * inv_c2).sqrt() + epsilon);
            }
        };
        for (i, layer) in net.layers.iter_mut().enumerate() {
            update(
                contiguous_mut(layer.weights.as_slice_mut()),
                contiguous_mut(self.m.weights[i].as_slice_mut()),
                contiguous_mut(self.v.weights[i].as_slice_mut()),
                grads.weights[i].as_slice().expect("gradients are contiguous"),
            );
            update(
                contiguous_mut(layer.bias.as_slice_mut()),
                contiguous_mut(self.m.biases[i].as_slice_mut()),
                contiguous_mut(self.v.biases[i].as_slice_mut()),
                grads.biases[i].as_slice().expect("gradients are contiguous"),
            );
        }
    }
}

fn contiguous_mut(s: Option<&mut [f64]>) -> &mut [f64] {
    s.expect("parameters are stored contiguously")
}
