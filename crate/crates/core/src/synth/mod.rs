//! Audio backend: a deterministic 16-control additive synthesizer standing in
//! for a neural latent synth, plus the OSC message form used to drive an
//! external one.

mod cell;
mod offline;
mod render;
mod wav;

pub use cell::LatestValue;
pub use offline::{render_script, LatentScript, ScriptError, ScriptPoint};
pub use render::{render, render_in_place, AudioBlock, RenderError, SynthState, SUPPORTED_SAMPLE_RATES};
pub use wav::{encode_wav, write_wav, WavError};

use thiserror::Error;

use crate::latent::{AudioLatent, LatentError, AUDIO_LATENT_DIM};
use crate::osc::{OscError, OscMessage, OscValue};

pub const HARMONICS: usize = 8;
pub const RESERVED_CONTROLS: usize = 2;

pub const PITCH_MIN_HZ: f64 = 55.0;
pub const PITCH_MAX_HZ: f64 = 880.0;
pub const CUTOFF_MIN_HZ: f64 = 100.0;
pub const CUTOFF_MAX_HZ: f64 = 12_000.0;
pub const VIBRATO_RATE_MAX_HZ: f64 = 8.0;
pub const VIBRATO_DEPTH_MAX: f64 = 0.05;

/// Default address for latent updates sent to an external synth.
pub const DEFAULT_LATENT_ADDRESS: &str = "/rave/latent";

/// The synthesizer's controls, one per audio latent dimension.
///
/// | dim    | control                        |
/// |--------|--------------------------------|
/// | 0      | `master_amp` (negative = mute) |
/// | 1      | `pitch_hz`, exponential        |
/// | 2..=9  | `harmonic_amps[0..8]`          |
/// | 10     | `lpf_cutoff_hz`                |
/// | 11     | `vibrato_rate_hz`              |
/// | 12     | `vibrato_depth`                |
/// | 13     | `noise_mix`                    |
/// | 14, 15 | `reserved`                     |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub master_amp: f64,
    pub pitch_hz: f64,
    pub harmonic_amps: [f64; HARMONICS],
    pub lpf_cutoff_hz: f64,
    pub vibrato_rate_hz: f64,
    pub vibrato_depth: f64,
    pub noise_mix: f64,
    pub reserved: [f64; RESERVED_CONTROLS],
}

impl Default for SynthParams {
    /// Silent, with every other control at the centre of its range.
    fn default() -> Self {
        latent_to_params(&AudioLatent::zeros())
    }
}

impl SynthParams {
    /// Clamps every field into its documented range; NaN becomes the lower
    /// bound.
    pub fn sanitized(mut self) -> Self {
        fn c(v: f64, lo: f64, hi: f64) -> f64 {
            if v.is_nan() {
                lo
            } else {
                v.clamp(lo, hi)
            }
        }
        self.master_amp = c(self.master_amp, 0.0, 1.0);
        self.pitch_hz = c(self.pitch_hz, PITCH_MIN_HZ, PITCH_MAX_HZ);
        for a in &mut self.harmonic_amps {
            *a = c(*a, 0.0, 1.0);
        }
        self.lpf_cutoff_hz = c(self.lpf_cutoff_hz, CUTOFF_MIN_HZ, CUTOFF_MAX_HZ);
        self.vibrato_rate_hz = c(self.vibrato_rate_hz, 0.0, VIBRATO_RATE_MAX_HZ);
        self.vibrato_depth = c(self.vibrato_depth, 0.0, VIBRATO_DEPTH_MAX);
        self.noise_mix = c(self.noise_mix, 0.0, 1.0);
        for r in &mut self.reserved {
            *r = c(*r, 0.0, 1.0);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("expected {AUDIO_LATENT_DIM} latent values, got {0}")]
    DimensionMismatch(usize),
    #[error("latent value at index {0} is not finite")]
    NonFiniteInput(usize),
}

#[inline]
fn unit(z: f64) -> f64 {
    (z + 1.0) * 0.5
}

#[inline]
fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + (hi - lo) * u
}

pub fn latent_to_params(z: &AudioLatent) -> SynthParams {
    let v = z.values();
    let mut harmonic_amps = [0.0; HARMONICS];
    for (a, &zi) in harmonic_amps.iter_mut().zip(&v[2..2 + HARMONICS]) {
        *a = unit(zi);
    }
    let mut reserved = [0.0; RESERVED_CONTROLS];
    for (r, &zi) in reserved.iter_mut().zip(&v[14..]) {
        *r = unit(zi);
    }
    SynthParams {
        master_amp: v[0].clamp(0.0, 1.0),
        // 55 Hz · 2^(4u): four octaves, geometric midpoint 220 Hz at z = 0
        pitch_hz: PITCH_MIN_HZ * (4.0 * unit(v[1])).exp2(),
        harmonic_amps,
        lpf_cutoff_hz: lerp(CUTOFF_MIN_HZ, CUTOFF_MAX_HZ, unit(v[10])),
        vibrato_rate_hz: lerp(0.0, VIBRATO_RATE_MAX_HZ, unit(v[11])),
        vibrato_depth: lerp(0.0, VIBRATO_DEPTH_MAX, unit(v[12])),
        noise_mix: unit(v[13]),
        reserved,
    }
}

/// Slice form of [`latent_to_params`]; values outside `[-1, 1]` are clamped.
pub fn latent_slice_to_params(z: &[f64]) -> Result<SynthParams, ParamError> {
    if z.len() != AUDIO_LATENT_DIM {
        return Err(ParamError::DimensionMismatch(z.len()));
    }
    let latent = AudioLatent::clamped(z).map_err(|e| match e {
        LatentError::NonFinite(i) => ParamError::NonFiniteInput(i),
        _ => ParamError::DimensionMismatch(z.len()),
    })?;
    Ok(latent_to_params(&latent))
}

/// One OSC message carrying the latent as 16 float arguments in order.
pub fn emit_latent_osc(z: &AudioLatent, address: &str) -> Result<OscMessage, OscError> {
    let args = z
        .as_slice()
        .iter()
        .map(|&v| OscValue::Float32(v as f32))
        .collect();
    OscMessage::new(address, args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::osc::{decode_packet, encode_message, OscPacket};
    use proptest::prelude::*;

    fn latent_with(dim: usize, v: f64) -> AudioLatent {
        AudioLatent::zeros().with_dim(dim, v).unwrap()
    }

    #[test]
    fn zero_latent_is_silent() {
        let p = latent_to_params(&AudioLatent::zeros());
        assert_eq!(p.master_amp, 0.0);
    }

    #[test]
    fn master_amp_endpoints() {
        assert_eq!(latent_to_params(&latent_with(0, 1.0)).master_amp, 1.0);
        assert_eq!(latent_to_params(&latent_with(0, -1.0)).master_amp, 0.0);
        assert_eq!(latent_to_params(&latent_with(0, 0.25)).master_amp, 0.25);
    }

    #[test]
    fn pitch_midpoint_is_geometric_mean() {
        let p = latent_to_params(&AudioLatent::zeros());
        assert_eq!(p.pitch_hz, 220.0);
        assert!((p.pitch_hz - (55.0f64 * 880.0).sqrt()).abs() < 1e-12);
        assert_eq!(latent_to_params(&latent_with(1, -1.0)).pitch_hz, 55.0);
        assert_eq!(latent_to_params(&latent_with(1, 1.0)).pitch_hz, 880.0);
    }

    #[test]
    fn ranges_at_extremes() {
        let lo = latent_to_params(&AudioLatent::from_slice(&[-1.0; 16]).unwrap());
        let hi = latent_to_params(&AudioLatent::from_slice(&[1.0; 16]).unwrap());
        assert_eq!(lo.sanitized(), lo);
        assert_eq!(hi.sanitized(), hi);
        assert_eq!(lo.lpf_cutoff_hz, CUTOFF_MIN_HZ);
        assert_eq!(hi.lpf_cutoff_hz, CUTOFF_MAX_HZ);
        assert_eq!(hi.vibrato_rate_hz, 8.0);
        assert_eq!(hi.vibrato_depth, 0.05);
        assert_eq!(hi.harmonic_amps, [1.0; 8]);
        assert_eq!(lo.noise_mix, 0.0);
    }

    #[test]
    fn slice_errors() {
        assert_eq!(latent_slice_to_params(&[0.0; 15]), Err(ParamError::DimensionMismatch(15)));
        let mut v = [0.0; 16];
        v[4] = f64::INFINITY;
        assert_eq!(latent_slice_to_params(&v), Err(ParamError::NonFiniteInput(4)));
    }

    #[test]
    fn latent_osc_message() {
        let m = emit_latent_osc(&AudioLatent::zeros(), DEFAULT_LATENT_ADDRESS).unwrap();
        assert_eq!(m.address, "/rave/latent");
        assert_eq!(m.args, vec![OscValue::Float32(0.0); 16]);
        let back = decode_packet(&encode_message(&m).unwrap()).unwrap();
        assert_eq!(back, OscPacket::Message(m));
        assert!(matches!(
            emit_latent_osc(&AudioLatent::zeros(), "bad"),
            Err(OscError::InvalidAddress(_))
        ));
    }

    fn params_vec(p: &SynthParams) -> Vec<f64> {
        let mut v = vec![p.master_amp, p.pitch_hz];
        v.extend(p.harmonic_amps);
        v.extend([p.lpf_cutoff_hz, p.vibrato_rate_hz, p.vibrato_depth, p.noise_mix]);
        v.extend(p.reserved);
        v
    }

    proptest! {
        #[test]
        fn monotone_per_dimension(
            base in proptest::collection::vec(-1.0f64..=1.0, 16),
            dim in 0usize..16,
            a in -1.0f64..=1.0,
            b in -1.0f64..=1.0,
        ) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let z = AudioLatent::from_slice(&base).unwrap();
            let p_lo = params_vec(&latent_to_params(&z.with_dim(dim, lo).unwrap()));
            let p_hi = params_vec(&latent_to_params(&z.with_dim(dim, hi).unwrap()));
            // exactly one control is driven by each dimension
            prop_assert_eq!(p_lo.len(), 16);
            for i in 0..16 {
                if i == dim {
                    prop_assert!(p_lo[i] <= p_hi[i]);
                } else {
                    prop_assert_eq!(p_lo[i], p_hi[i]);
                }
            }
        }

        #[test]
        fn continuous(z in proptest::collection::vec(-0.999f64..=0.999, 16), dim in 0usize..16) {
            let base = AudioLatent::from_slice(&z).unwrap();
            let nudged = base.with_dim(dim, z[dim] + 1e-9).unwrap();
            let a = params_vec(&latent_to_params(&base));
            let b = params_vec(&latent_to_params(&nudged));
            for (x, y) in a.iter().zip(&b) {
                // steepest control is the cutoff: 5950 Hz per latent unit
                prop_assert!((x - y).abs() < 1e-5);
            }
        }
    }
}
