//! Core of a sketch-to-sound latent mapping engine.
//!
//! Sketches are rasterized and compressed by an autoencoder into a
//! 32-dimensional latent; a small interactively trained regressor maps that
//! latent onto the 16 controls of a synthesizer, either the built-in additive
//! synth or an external latent synth reached over OSC.

pub mod autoencoder;
pub mod iml;
pub mod latent;
pub mod nn;
pub mod osc;
pub mod rng;
pub mod session;
pub mod sketch;
pub mod synth;

pub use latent::{AudioLatent, SketchLatent, AUDIO_LATENT_DIM, SKETCH_LATENT_DIM};
