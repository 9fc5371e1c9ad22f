use std::net::{SocketAddr, ToSocketAddrs};
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use latentmap::session::{BackendKind, SessionConfig, SessionState};
use latentmap::synth::LatentScript;
use latentmap_engine::app;
use latentmap_engine::backend::{InternalSynth, LatentSink, OscSink};
use latentmap_engine::net::{start_osc_control, start_websocket};
use latentmap_engine::Engine;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Backend {
    Internal,
    Osc,
}

/// Sketch-to-sound latent mapping engine.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
    #[arg(long)]
    ws_port: Option<u16>,
    #[arg(long)]
    osc_in_port: Option<u16>,
    /// Destination of latent updates in osc mode, as host:port.
    #[arg(long)]
    osc_out: Option<String>,
    /// Corpus manifest or directory used to train the encoder.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Encoder checkpoint; without one the encoder is trained at start-up.
    #[arg(long)]
    encoder: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Render offline to this WAV file and exit.
    #[arg(long, requires = "duration")]
    render_wav: Option<PathBuf>,
    /// Length of the offline render in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// JSON latent script for the offline render; random latents otherwise.
    #[arg(long, requires = "render_wav")]
    latent_script: Option<PathBuf>,
    /// Train an encoder, write its checkpoint here and exit.
    #[arg(long, conflicts_with = "render_wav")]
    train_encoder: Option<PathBuf>,
}

fn resolve(args: &Args) -> anyhow::Result<SessionConfig> {
    let mut cfg = match &args.config {
        Some(p) => SessionConfig::load(p)?,
        None => SessionConfig::default(),
    };
    if let Some(b) = args.backend {
        cfg.backend = match b {
            Backend::Internal => BackendKind::Internal,
            Backend::Osc => BackendKind::Osc,
        };
    }
    if let Some(p) = args.ws_port {
        cfg.ws_port = p;
    }
    if let Some(p) = args.osc_in_port {
        cfg.osc_in_port = p;
    }
    if let Some(hp) = &args.osc_out {
        let (host, port) = hp
            .rsplit_once(':')
            .with_context(|| format!("--osc-out expects host:port, got {hp}"))?;
        cfg.osc_out.host = host.trim_matches(['[', ']']).to_string();
        cfg.osc_out.port = port.parse().with_context(|| format!("bad port in {hp}"))?;
    }
    if let Some(d) = &args.dataset {
        cfg.dataset_path = Some(d.clone());
    }
    if let Some(e) = &args.encoder {
        cfg.encoder_checkpoint = Some(e.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn osc_target(cfg: &SessionConfig) -> anyhow::Result<SocketAddr> {
    (cfg.osc_out.host.as_str(), cfg.osc_out.port)
        .to_socket_addrs()?
        .next()
        .with_context(|| format!("cannot resolve {}", cfg.osc_out.host))
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let cfg = resolve(&args)?;

    if let Some(out) = &args.train_encoder {
        return app::train_encoder_to(out, cfg.dataset_path.as_deref(), cfg.seed);
    }

    if let Some(out) = &args.render_wav {
        let duration = args.duration.expect("clap enforces --duration");
        if !(duration.is_finite() && duration > 0.0) {
            bail!("--duration must be a positive number of seconds");
        }
        let script = match &args.latent_script {
            Some(p) => LatentScript::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => app::random_script(cfg.seed, duration, 0.25),
        };
        return app::render_wav(out, &script, duration, cfg.sample_rate, cfg.seed);
    }

    let (encoder, source) = app::obtain_encoder(
        cfg.encoder_checkpoint.as_deref(),
        cfg.dataset_path.as_deref(),
        cfg.seed,
    )?;
    let mut state = SessionState::new(encoder, cfg.mapper.clone(), cfg.seed)?;
    if let Some(p) = source {
        state = state.with_encoder_source(p);
    }

    let sink: Box<dyn LatentSink> = match cfg.backend {
        BackendKind::Internal => {
            log::info!("internal synth at {} Hz", cfg.sample_rate);
            Box::new(InternalSynth::start(cfg.sample_rate, cfg.seed))
        }
        BackendKind::Osc => {
            let target = osc_target(&cfg)?;
            log::info!("sending {} to {target}", cfg.osc_out.address);
            Box::new(OscSink::new(target, cfg.osc_out.address.clone())?)
        }
    };

    let (tx, engine) = Engine::new(state, sink).spawn();
    let ws = start_websocket(SocketAddr::from(([0, 0, 0, 0], cfg.ws_port)), tx.clone())
        .with_context(|| format!("binding WebSocket port {}", cfg.ws_port))?;
    let osc = start_osc_control(SocketAddr::from(([0, 0, 0, 0], cfg.osc_in_port)), tx.clone())
        .with_context(|| format!("binding OSC port {}", cfg.osc_in_port))?;
    log::info!(
        "listening: WebSocket on {}, OSC control on {}",
        ws.local_addr(),
        osc.local_addr()
    );
    drop(tx);
    let _ = engine.join();
    ws.stop();
    osc.stop();
    Ok(())
}
