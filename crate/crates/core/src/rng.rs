//! Seeded generator behind latent randomisation.
//!
//! SplitMix64: the state advances by the golden-ratio increment
//! `0x9E3779B97F4A7C15` and each output is the state passed through the
//! mixer `z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9; z = (z ^ (z >> 27)) *
//! 0x94D049BB133111EB; z ^ (z >> 31)`. A uniform value in `[-1, 1]` takes
//! the top 53 bits `u` of an output and returns `2·u / (2^53 − 1) − 1`.

use serde::{Deserialize, Serialize};

use crate::latent::{AudioLatent, AUDIO_LATENT_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentRng {
    state: u64,
}

impl LatentRng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Resumes a stream from a value previously returned by [`Self::state`].
    pub fn from_state(state: u64) -> Self {
        Self { state }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the closed interval `[-1, 1]`.
    pub fn next_signed_unit(&mut self) -> f64 {
        const MAX53: f64 = ((1u64 << 53) - 1) as f64;
        let u = (self.next_u64() >> 11) as f64;
        2.0 * u / MAX53 - 1.0
    }
}

/// Sixteen independent uniform draws in `[-1, 1]`.
pub fn randomize_latent(rng: LatentRng) -> (AudioLatent, LatentRng) {
    let mut rng = rng;
    let mut v = [0.0; AUDIO_LATENT_DIM];
    for x in &mut v {
        *x = rng.next_signed_unit();
    }
    let z = AudioLatent::from_slice(&v).expect("draws lie in [-1, 1]");
    (z, rng)
}
