#![allow(dead_code)]

use std::net::TcpStream;
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, Sender};
use latentmap::autoencoder::AutoencoderModel;
use latentmap::iml::MapperConfig;
use latentmap::session::SessionState;
use latentmap::AudioLatent;
use latentmap_engine::backend::ChannelSink;
use latentmap_engine::protocol::ServerMessage;
use latentmap_engine::{Engine, EngineMsg};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

pub fn small_state() -> SessionState {
    let enc = Arc::new(AutoencoderModel::new(&[64, 32, 32, 32, 64], 0.3, 11).unwrap());
    SessionState::new(enc, MapperConfig::default(), 42).unwrap()
}

pub struct Running {
    pub tx: Sender<EngineMsg>,
    pub handle: JoinHandle<Engine>,
    pub latents: Receiver<AudioLatent>,
}

pub fn spawn_engine(state: SessionState) -> Running {
    let (ltx, latents) = unbounded();
    let (tx, handle) = Engine::new(state, Box::new(ChannelSink(ltx))).spawn();
    Running { tx, handle, latents }
}

impl Running {
    pub fn finish(self) -> Engine {
        self.tx.send(EngineMsg::Shutdown).unwrap();
        self.handle.join().unwrap()
    }
}

pub type Client = WebSocket<MaybeTlsStream<TcpStream>>;

pub fn connect(addr: std::net::SocketAddr) -> Client {
    let (ws, _) = tungstenite::connect(format!("ws://{addr}")).unwrap();
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    }
    ws
}

pub fn send(ws: &mut Client, json: &str) {
    ws.send(Message::text(json)).unwrap();
}

pub fn recv(ws: &mut Client) -> ServerMessage {
    let deadline = Instant::now() + Duration::from_secs(5);
    loop {
        assert!(Instant::now() < deadline, "no frame from engine");
        match ws.read().unwrap() {
            Message::Text(t) => return serde_json::from_str(&t).unwrap(),
            _ => continue,
        }
    }
}

/// Reads frames until one satisfies `pred`, returning it.
pub fn recv_until(ws: &mut Client, pred: impl Fn(&ServerMessage) -> bool) -> ServerMessage {
    for _ in 0..100 {
        let m = recv(ws);
        if pred(&m) {
            return m;
        }
    }
    panic!("expected frame never arrived");
}
