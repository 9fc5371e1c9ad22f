//! Start-up helpers shared by the binary and its tests.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use latentmap::autoencoder::{load_checkpoint, save_checkpoint, train_autoencoder, AutoencoderModel, Hyperparams};
use latentmap::rng::{randomize_latent, LatentRng};
use latentmap::sketch::{read_corpus_manifest, synthetic_corpus, Raster, DEFAULT_RESOLUTION};
use latentmap::synth::{render_script, write_wav, LatentScript, ScriptPoint};

/// Size of the generated corpus used when no dataset is configured.
pub const SYNTHETIC_CORPUS_SIZE: usize = 200;

/// Accepts a manifest file or a directory containing `manifest.txt`.
pub fn load_dataset(path: &Path) -> anyhow::Result<Vec<Raster>> {
    let manifest = if path.is_dir() {
        path.join("manifest.txt")
    } else {
        path.to_path_buf()
    };
    let corpus = read_corpus_manifest(&manifest)?;
    if corpus.is_empty() {
        bail!("dataset {} is empty", manifest.display());
    }
    Ok(corpus)
}

pub fn train_encoder(dataset: Option<&Path>, seed: u64) -> anyhow::Result<AutoencoderModel> {
    let corpus = match dataset {
        Some(p) => load_dataset(p)?,
        None => {
            log::info!("no dataset configured; generating {SYNTHETIC_CORPUS_SIZE} synthetic sketches");
            synthetic_corpus(SYNTHETIC_CORPUS_SIZE, DEFAULT_RESOLUTION, seed)
        }
    };
    let hp = Hyperparams {
        seed,
        ..Hyperparams::default()
    };
    log::info!("training encoder on {} rasters for {} epochs", corpus.len(), hp.epochs);
    let (model, history) = train_autoencoder(&corpus, &hp)?;
    log::info!(
        "encoder loss {:.6} -> {:.6}",
        history.first().copied().unwrap_or(f64::NAN),
        history.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

/// Loads the checkpoint if one is given, otherwise trains a fresh encoder.
pub fn obtain_encoder(
    checkpoint: Option<&Path>,
    dataset: Option<&Path>,
    seed: u64,
) -> anyhow::Result<(Arc<AutoencoderModel>, Option<PathBuf>)> {
    match checkpoint {
        Some(p) => {
            let model = load_checkpoint(p).with_context(|| format!("loading encoder {}", p.display()))?;
            Ok((Arc::new(model), Some(p.to_path_buf())))
        }
        None => Ok((Arc::new(train_encoder(dataset, seed)?), None)),
    }
}

pub fn train_encoder_to(out: &Path, dataset: Option<&Path>, seed: u64) -> anyhow::Result<()> {
    let model = train_encoder(dataset, seed)?;
    save_checkpoint(&model, out).with_context(|| format!("writing {}", out.display()))?;
    log::info!("encoder written to {}", out.display());
    Ok(())
}

/// A new audible random latent every `interval` seconds.
pub fn random_script(seed: u64, duration: f64, interval: f64) -> LatentScript {
    let mut rng = LatentRng::new(seed);
    let mut points = Vec::new();
    let mut t = 0.0;
    while t < duration {
        let (z, next) = randomize_latent(rng);
        rng = next;
        let amp = z.get(0).expect("dimension 0 exists").abs();
        points.push(ScriptPoint {
            t,
            latent: z.with_dim(0, amp).expect("in range"),
        });
        t += interval;
    }
    LatentScript { points }
}

pub fn render_wav(
    out: &Path,
    script: &LatentScript,
    duration: f64,
    sample_rate: u32,
    seed: u64,
) -> anyhow::Result<()> {
    let block = render_script(script, duration, sample_rate, seed)?;
    write_wav(out, &block).with_context(|| format!("writing {}", out.display()))?;
    log::info!("rendered {:.3} s to {}", block.duration_secs(), out.display());
    Ok(())
}
