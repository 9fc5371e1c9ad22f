//! Backpropagation against central finite differences of an independent
//! forward pass.

use latentmap::autoencoder::AutoencoderModel;
use latentmap::nn::Activation;
use ndarray::Array2;
use proptest::prelude::*;

const EPS: f64 = 1e-5;
const TOLERANCE: f64 = 1e-4;
/// Denominator floor so that gradients that are zero up to rounding are
/// compared absolutely.
const FLOOR: f64 = 1e-8;

/// Plain-loop forward pass and mean squared reconstruction error over
/// parameters laid out layer by layer, row-major weights then biases.
fn oracle_loss(dims: &[usize], acts: &[Activation], params: &[f64], x: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut offset = 0;
    for (l, act) in dims.windows(2).zip(acts) {
        let (n_in, n_out) = (l[0], l[1]);
        let w = &params[offset..offset + n_in * n_out];
        let b = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        a = (0..n_out)
            .map(|o| {
                let z: f64 = b[o] + (0..n_in).map(|i| w[o * n_in + i] * a[i]).sum::<f64>();
                match act {
                    Activation::Identity => z,
                    Activation::Tanh => z.tanh(),
                    Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
                }
            })
            .collect();
    }
    a.iter().zip(x).map(|(y, t)| (y - t) * (y - t)).sum::<f64>() / x.len() as f64
}

fn max_relative_error(seed: u64, input: &[f64], biases: &[f64]) -> f64 {
    let dims = [4, 3, 2, 3, 4];
    let mut model = AutoencoderModel::new(&dims, 1.0, seed).unwrap();
    let net = model.network_mut();
    let mut k = 0;
    for layer in &mut net.layers {
        for b in layer.bias.iter_mut() {
            *b = biases[k];
            k += 1;
        }
    }
    let net = model.network();
    let acts = net.activations();
    let x = Array2::from_shape_vec((1, 4), input.to_vec()).unwrap();
    let analytic = net.loss_and_gradients(x.view(), x.view()).1.flatten();
    let params = net.parameters();
    assert_eq!(analytic.len(), params.len());

    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus[i] += EPS;
        let mut minus = params.clone();
        minus[i] -= EPS;
        let numeric = (oracle_loss(&dims, &acts, &plus, input) - oracle_loss(&dims, &acts, &minus, input))
            / (2.0 * EPS);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn tiny_autoencoder_fixed_case() {
    let err = max_relative_error(0, &[0.9, 0.1, 0.4, 0.7], &[0.1, -0.2, 0.3, 0.05, -0.1, 0.2, 0.0, -0.3, 0.15, 0.25, -0.05, 0.1]);
    assert!(err <= TOLERANCE, "max relative error {err:e}");
}

#[test]
fn oracle_matches_library_loss() {
    let model = AutoencoderModel::new(&[4, 3, 2, 3, 4], 1.0, 3).unwrap();
    let net = model.network();
    let input = [0.2, 0.4, 0.6, 0.8];
    let x = Array2::from_shape_vec((1, 4), input.to_vec()).unwrap();
    let lib = net.loss(x.view(), x.view());
    let oracle = oracle_loss(&net.layer_dims(), &net.activations(), &net.parameters(), &input);
    assert!((lib - oracle).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backprop_matches_finite_differences(
        seed in any::<u64>(),
        input in proptest::collection::vec(0.0f64..=1.0, 4),
        biases in proptest::collection::vec(-0.5f64..=0.5, 12),
    ) {
        let err = max_relative_error(seed, &input, &biases);
        prop_assert!(err <= TOLERANCE, "max relative error {:e}", err);
    }
}
