use std::f64::consts::TAU;

use thiserror::Error;

use super::{SynthParams, HARMONICS};

pub const SUPPORTED_SAMPLE_RATES: [u32; 2] = [44_100, 48_000];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("frame count must be at least 1")]
    InvalidFrameCount,
    #[error("unsupported sample rate {0} Hz")]
    UnsupportedSampleRate(u32),
}

/// Mono samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBlock {
    pub sample_rate: u32,
    pub samples: Vec<f64>,
}

impl AudioBlock {
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Oscillator, vibrato, filter and noise state threaded between blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthState {
    pub phases: [f64; HARMONICS],
    pub vibrato_phase: f64,
    pub filter: f64,
    pub noise: u64,
}

impl SynthState {
    pub fn new(noise_seed: u64) -> Self {
        Self {
            phases: [0.0; HARMONICS],
            vibrato_phase: 0.0,
            filter: 0.0,
            // xorshift state must be non-zero
            noise: noise_seed | 1,
        }
    }
}

impl Default for SynthState {
    fn default() -> Self {
        Self::new(0x9E37_79B9_7F4A_7C15)
    }
}

/// xorshift64* mapped to a uniform value in `[-1, 1)`.
#[inline]
fn next_noise(state: &mut u64) -> f64 {
    let mut x = *state;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    *state = x;
    let bits = x.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11;
    bits as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

#[inline]
fn wrap(phase: f64) -> f64 {
    if phase >= TAU {
        let p = phase - TAU;
        if p >= TAU {
            p.rem_euclid(TAU)
        } else {
            p
        }
    } else {
        phase
    }
}

fn check(nframes: usize, sample_rate: u32) -> Result<(), RenderError> {
    if nframes == 0 {
        return Err(RenderError::InvalidFrameCount);
    }
    if !SUPPORTED_SAMPLE_RATES.contains(&sample_rate) {
        return Err(RenderError::UnsupportedSampleRate(sample_rate));
    }
    Ok(())
}

/// Renders `nframes` samples and returns them with the advanced state.
pub fn render(
    state: &SynthState,
    params: &SynthParams,
    nframes: usize,
    sample_rate: u32,
) -> Result<(AudioBlock, SynthState), RenderError> {
    check(nframes, sample_rate)?;
    let mut next = state.clone();
    let mut samples = vec![0.0; nframes];
    render_in_place(&mut next, params, &mut samples, sample_rate)?;
    Ok((
        AudioBlock {
            sample_rate,
            samples,
        },
        next,
    ))
}

/// Allocation-free form of [`render`] for the audio thread.
pub fn render_in_place(
    state: &mut SynthState,
    params: &SynthParams,
    out: &mut [f64],
    sample_rate: u32,
) -> Result<(), RenderError> {
    check(out.len(), sample_rate)?;
    let p = params.sanitized();
    let sr = sample_rate as f64;
    let nyquist = sr * 0.5;

    let amp_sum: f64 = p.harmonic_amps.iter().sum();
    let tone_norm = 1.0 / amp_sum.max(1.0);
    let vib_step = TAU * p.vibrato_rate_hz / sr;
    let alpha = 1.0 - (-TAU * p.lpf_cutoff_hz / sr).exp();
    let noise_mix = p.noise_mix;
    let silent = p.master_amp == 0.0;

    for sample in out.iter_mut() {
        let freq = p.pitch_hz * (1.0 + p.vibrato_depth * state.vibrato_phase.sin());
        state.vibrato_phase = wrap(state.vibrato_phase + vib_step);

        let mut tone = 0.0;
        for (h, (phase, &amp)) in state.phases.iter_mut().zip(&p.harmonic_amps).enumerate() {
            let f = freq * (h + 1) as f64;
            if amp > 0.0 && f < nyquist {
                tone += amp * phase.sin();
            }
            *phase = wrap(*phase + TAU * f / sr);
        }
        tone *= tone_norm;

        let noise = next_noise(&mut state.noise);
        let x = (1.0 - noise_mix) * tone + noise_mix * noise;
        state.filter += alpha * (x - state.filter);

        *sample = if silent {
            0.0
        } else {
            (p.master_amp * state.filter).clamp(-1.0, 1.0)
        };
    }
    Ok(())
}
