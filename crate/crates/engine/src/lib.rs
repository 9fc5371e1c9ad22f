//! Runtime around the latentmap core: the event loop that owns the session,
//! the synth backends, and the WebSocket and OSC adapters.

pub mod app;
pub mod backend;
pub mod engine;
pub mod net;
pub mod osc_control;
pub mod protocol;

pub use engine::{Engine, EngineMsg};
