//! Network adapters: WebSocket for the UI, UDP for OSC control. Both only
//! translate traffic into engine messages and back.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use chrono::Utc;
use crossbeam_channel::{unbounded, Sender};
use latentmap::osc::decode_packet;
use latentmap::session::Input;
use tungstenite::{Error as WsError, Message, WebSocket};

use crate::engine::EngineMsg;
use crate::osc_control::packet_to_commands;
use crate::protocol::{ClientMessage, ServerMessage};

const POLL: Duration = Duration::from_millis(2);

/// A background listener; stops when dropped.
pub struct Server {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl Server {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::Release);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Blocks until the listener exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn spawn(name: &str, f: impl FnOnce() + Send + 'static) -> io::Result<JoinHandle<()>> {
    thread::Builder::new().name(name.into()).spawn(f)
}

pub fn start_websocket(bind: SocketAddr, engine: Sender<EngineMsg>) -> io::Result<Server> {
    let listener = TcpListener::bind(bind)?;
    listener.set_nonblocking(true)?;
    let local_addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = spawn("ws-accept", move || {
        let mut sessions = Vec::new();
        while !flag.load(Ordering::Acquire) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    log::info!("UI connected from {peer}");
                    let engine = engine.clone();
                    let flag = Arc::clone(&flag);
                    match spawn("ws-session", move || serve_client(stream, engine, &flag)) {
                        Ok(h) => sessions.push(h),
                        Err(e) => log::error!("cannot serve {peer}: {e}"),
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL * 5),
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
        for h in sessions {
            let _ = h.join();
        }
    })?;
    Ok(Server {
        local_addr,
        stop,
        thread: Some(thread),
    })
}

fn is_timeout(e: &WsError) -> bool {
    matches!(e, WsError::Io(io) if matches!(io.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut))
}

fn serve_client(stream: TcpStream, engine: Sender<EngineMsg>, stop: &AtomicBool) {
    if let Err(e) = stream.set_nonblocking(false).and_then(|_| stream.set_nodelay(true)) {
        log::warn!("socket setup failed: {e}");
        return;
    }
    let mut ws = match tungstenite::accept(stream) {
        Ok(ws) => ws,
        Err(e) => {
            log::warn!("WebSocket handshake failed: {e}");
            return;
        }
    };
    if let Err(e) = ws.get_ref().set_read_timeout(Some(POLL)) {
        log::warn!("socket setup failed: {e}");
        return;
    }
    let (outbox, inbox) = unbounded();
    if engine.send(EngineMsg::Subscribe(outbox)).is_err() {
        return;
    }
    while !stop.load(Ordering::Acquire) {
        match ws.read() {
            Ok(Message::Text(text)) => {
                let reply = match ClientMessage::parse(&text) {
                    Ok(msg) => {
                        if engine.send(EngineMsg::Input(msg.into_input(Utc::now()))).is_err() {
                            break;
                        }
                        None
                    }
                    Err(e) => Some(ServerMessage::Rejected {
                        reason: format!("malformed message: {e}"),
                    }),
                };
                if let Some(r) = reply {
                    if send(&mut ws, &r).is_err() {
                        break;
                    }
                }
            }
            Ok(Message::Close(_)) => break,
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(WsError::ConnectionClosed | WsError::AlreadyClosed) => break,
            Err(e) => {
                log::warn!("WebSocket error: {e}");
                break;
            }
        }
        let mut failed = false;
        for msg in inbox.try_iter() {
            if send(&mut ws, &msg).is_err() {
                failed = true;
                break;
            }
        }
        if failed {
            break;
        }
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    log::info!("UI disconnected");
}

fn send(ws: &mut WebSocket<TcpStream>, msg: &ServerMessage) -> Result<(), WsError> {
    match ws.send(Message::text(msg.to_json())) {
        Err(e) if is_timeout(&e) => Ok(()),
        other => other,
    }
}

pub fn start_osc_control(bind: SocketAddr, engine: Sender<EngineMsg>) -> io::Result<Server> {
    let socket = UdpSocket::bind(bind)?;
    socket.set_read_timeout(Some(POLL * 10))?;
    let local_addr = socket.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let flag = Arc::clone(&stop);
    let thread = spawn("osc-in", move || {
        let mut buf = vec![0u8; 65_536];
        while !flag.load(Ordering::Acquire) {
            let (n, peer) = match socket.recv_from(&mut buf) {
                Ok(r) => r,
                Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => continue,
                Err(e) => {
                    log::warn!("OSC receive failed: {e}");
                    continue;
                }
            };
            let packet = match decode_packet(&buf[..n]) {
                Ok(p) => p,
                Err(e) => {
                    log::warn!("bad OSC packet from {peer}: {e}");
                    continue;
                }
            };
            for cmd in packet_to_commands(&packet) {
                match cmd {
                    Ok(cmd) => {
                        if engine.send(EngineMsg::Input(Input::Command(cmd))).is_err() {
                            return;
                        }
                    }
                    Err(e) => log::warn!("OSC from {peer}: {e}"),
                }
            }
        }
    })?;
    Ok(Server {
        local_addr,
        stop,
        thread: Some(thread),
    })
}
