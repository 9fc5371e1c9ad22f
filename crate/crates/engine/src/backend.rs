//! Where latent updates go: the built-in synth or an external one over OSC.

use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use anyhow::Context;
use crossbeam_channel::Sender;
use latentmap::osc::encode_message;
use latentmap::synth::{emit_latent_osc, latent_to_params, render_in_place, LatestValue, SynthState};
use latentmap::AudioLatent;

pub trait LatentSink: Send {
    fn send(&mut self, latent: &AudioLatent) -> anyhow::Result<()>;
}

/// Sends one OSC datagram per update.
pub struct OscSink {
    socket: UdpSocket,
    target: SocketAddr,
    address: String,
}

impl OscSink {
    pub fn new(target: SocketAddr, address: impl Into<String>) -> anyhow::Result<Self> {
        let bind: SocketAddr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }
            .parse()
            .expect("literal address");
        let socket = UdpSocket::bind(bind).context("binding OSC output socket")?;
        let address = address.into();
        latentmap::osc::validate_address(&address)?;
        Ok(Self {
            socket,
            target,
            address,
        })
    }
}

impl LatentSink for OscSink {
    fn send(&mut self, latent: &AudioLatent) -> anyhow::Result<()> {
        let bytes = encode_message(&emit_latent_osc(latent, &self.address)?)?;
        self.socket.send_to(&bytes, self.target)?;
        Ok(())
    }
}

pub const BLOCK_FRAMES: usize = 256;

/// The built-in synth. A render thread paced like an audio device pulls the
/// latest latent once per block; there is no device output, so samples are
/// discarded after rendering.
pub struct InternalSynth {
    cell: Arc<LatestValue<AudioLatent>>,
    running: Arc<AtomicBool>,
    thread: Option<JoinHandle<u64>>,
}

impl InternalSynth {
    pub fn start(sample_rate: u32, noise_seed: u64) -> Self {
        let cell = Arc::new(LatestValue::new(AudioLatent::zeros()));
        let running = Arc::new(AtomicBool::new(true));
        let thread = {
            let cell = Arc::clone(&cell);
            let running = Arc::clone(&running);
            thread::Builder::new()
                .name("synth".into())
                .spawn(move || audio_loop(&cell, &running, sample_rate, noise_seed))
                .expect("spawning the synth thread")
        };
        Self {
            cell,
            running,
            thread: Some(thread),
        }
    }

    pub fn cell(&self) -> Arc<LatestValue<AudioLatent>> {
        Arc::clone(&self.cell)
    }

    /// Stops the render thread and returns how many blocks it rendered.
    pub fn stop(mut self) -> u64 {
        self.shutdown()
    }

    fn shutdown(&mut self) -> u64 {
        self.running.store(false, Ordering::Release);
        self.thread.take().map_or(0, |t| t.join().unwrap_or(0))
    }
}

impl Drop for InternalSynth {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn audio_loop(cell: &LatestValue<AudioLatent>, running: &AtomicBool, sample_rate: u32, seed: u64) -> u64 {
    let mut state = SynthState::new(seed);
    let mut buf = [0.0; BLOCK_FRAMES];
    let period = Duration::from_secs_f64(BLOCK_FRAMES as f64 / sample_rate as f64);
    let mut seen = u64::MAX;
    let mut params = latent_to_params(&AudioLatent::zeros());
    let mut deadline = Instant::now();
    let mut blocks = 0;
    while running.load(Ordering::Acquire) {
        let version = cell.version();
        if version != seen {
            params = latent_to_params(&cell.get());
            seen = version;
        }
        if render_in_place(&mut state, &params, &mut buf, sample_rate).is_err() {
            log::error!("unsupported sample rate {sample_rate}; synth stopped");
            break;
        }
        blocks += 1;
        deadline += period;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        } else {
            deadline = now;
        }
    }
    blocks
}

impl LatentSink for InternalSynth {
    fn send(&mut self, latent: &AudioLatent) -> anyhow::Result<()> {
        self.cell.store(*latent);
        Ok(())
    }
}

/// Forwards updates to a channel; for embedding and tests.
pub struct ChannelSink(pub Sender<AudioLatent>);

impl LatentSink for ChannelSink {
    fn send(&mut self, latent: &AudioLatent) -> anyhow::Result<()> {
        self.0.send(*latent).context("latent receiver dropped")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use latentmap::osc::{decode_packet, OscPacket, OscValue};

    #[test]
    fn osc_sink_sends_sixteen_floats() {
        let rx = UdpSocket::bind("127.0.0.1:0").unwrap();
        rx.set_read_timeout(Some(Duration::from_secs(2))).unwrap();
        let mut sink = OscSink::new(rx.local_addr().unwrap(), "/rave/latent").unwrap();
        let z = AudioLatent::zeros().with_dim(5, 0.5).unwrap();
        sink.send(&z).unwrap();
        let mut buf = [0u8; 1024];
        let n = rx.recv(&mut buf).unwrap();
        assert_eq!(n, 16 + 20 + 64);
        let OscPacket::Message(m) = decode_packet(&buf[..n]).unwrap() else {
            panic!("expected message");
        };
        assert_eq!(m.address, "/rave/latent");
        assert_eq!(m.args.len(), 16);
        assert_eq!(m.args[5], OscValue::Float32(0.5));
    }

    #[test]
    fn internal_synth_takes_latest() {
        let mut synth = InternalSynth::start(48_000, 1);
        let z = AudioLatent::zeros().with_dim(0, 1.0).unwrap();
        synth.send(&z).unwrap();
        assert_eq!(synth.cell().get(), z);
        thread::sleep(Duration::from_millis(30));
        assert!(synth.stop() >= 1);
    }
}
