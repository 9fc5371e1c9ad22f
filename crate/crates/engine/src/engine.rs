//! The event loop: the only owner of the session state.

use std::thread::{self, JoinHandle};

use crossbeam_channel::{unbounded, Receiver, Sender};
use latentmap::session::{load_session, save_session, step, Effect, Input, LatentSource, SessionState};

use crate::backend::LatentSink;
use crate::protocol::ServerMessage;

pub enum EngineMsg {
    Input(Input),
    /// Registers a UI outbox; it immediately receives a state frame.
    Subscribe(Sender<ServerMessage>),
    Shutdown,
}

pub struct Engine {
    state: Option<SessionState>,
    sink: Box<dyn LatentSink>,
    clients: Vec<Sender<ServerMessage>>,
}

impl Engine {
    pub fn new(state: SessionState, sink: Box<dyn LatentSink>) -> Self {
        Self {
            state: Some(state),
            sink,
            clients: Vec::new(),
        }
    }

    pub fn state(&self) -> &SessionState {
        self.state.as_ref().expect("state present between inputs")
    }

    pub fn into_state(self) -> SessionState {
        self.state.expect("state present between inputs")
    }

    /// Applies one input and carries out its effects.
    pub fn handle(&mut self, input: Input) -> Vec<Effect> {
        let state = self.state.take().expect("state present between inputs");
        let (state, effects) = step(state, input);
        self.state = Some(state);
        for e in &effects {
            self.execute(e);
        }
        effects
    }

    fn execute(&mut self, effect: &Effect) {
        match effect {
            Effect::LatentUpdate { latent, .. } => {
                if let Err(e) = self.sink.send(latent) {
                    log::warn!("latent update not delivered: {e:#}");
                }
            }
            Effect::SaveSession { path } => {
                if let Err(e) = save_session(self.state(), path) {
                    log::error!("save failed: {e}");
                    self.broadcast(ServerMessage::Rejected {
                        reason: format!("save failed: {e}"),
                    });
                } else {
                    log::info!("session saved to {}", path.display());
                }
            }
            Effect::LoadSession { path } => match load_session(path) {
                Ok(loaded) => {
                    log::info!("session loaded from {}", path.display());
                    let latent = loaded.current_latent;
                    let snap = loaded.snapshot();
                    self.state = Some(loaded);
                    self.execute(&Effect::LatentUpdate {
                        latent,
                        source: LatentSource::Load,
                    });
                    self.execute(&Effect::Snapshot(snap));
                }
                Err(e) => {
                    log::error!("load failed: {e}");
                    self.broadcast(ServerMessage::Rejected {
                        reason: format!("load failed: {e}"),
                    });
                }
            },
            Effect::Error { message } => {
                log::error!("{message}");
                self.broadcast(ServerMessage::Rejected {
                    reason: message.clone(),
                });
            }
            Effect::ExampleAdded { count } => log::info!("example {count} recorded"),
            Effect::TrainMapper => log::info!("training mapper"),
            other => {
                if let Effect::Rejected { reason } = other {
                    log::debug!("rejected: {reason}");
                }
                if let Some(msg) = ServerMessage::from_effect(other) {
                    self.broadcast(msg);
                }
            }
        }
    }

    fn broadcast(&mut self, msg: ServerMessage) {
        self.clients.retain(|c| c.send(msg.clone()).is_ok());
    }

    fn subscribe(&mut self, client: Sender<ServerMessage>) {
        let s = self.state().snapshot();
        let hello = ServerMessage::State {
            mode: s.mode,
            latent: s.latent,
            example_count: s.example_count,
        };
        if client.send(hello).is_ok() {
            self.clients.push(client);
        }
    }

    /// Processes messages until shutdown or until every sender is gone.
    pub fn run(mut self, inbox: Receiver<EngineMsg>) -> Self {
        for msg in inbox {
            match msg {
                EngineMsg::Input(input) => {
                    self.handle(input);
                }
                EngineMsg::Subscribe(client) => self.subscribe(client),
                EngineMsg::Shutdown => break,
            }
        }
        self
    }

    pub fn spawn(self) -> (Sender<EngineMsg>, JoinHandle<Engine>) {
        let (tx, rx) = unbounded();
        let handle = thread::Builder::new()
            .name("engine".into())
            .spawn(move || self.run(rx))
            .expect("spawning the engine thread");
        (tx, handle)
    }
}
