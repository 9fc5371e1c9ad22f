use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

use super::AudioBlock;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("WAV encoding failed: {0}")]
    Encode(#[from] hound::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

#[inline]
fn quantize(s: f64) -> i16 {
    (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16
}

/// RIFF/WAVE, mono, 16-bit little-endian PCM.
pub fn encode_wav(block: &AudioBlock) -> Result<Vec<u8>, WavError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: block.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::with_capacity(44 + 2 * block.samples.len()));
    {
        let mut w = hound::WavWriter::new(&mut buf, spec)?;
        let mut w16 = w.get_i16_writer(block.samples.len() as u32);
        for &s in &block.samples {
            w16.write_sample(quantize(s));
        }
        w16.flush()?;
        w.finalize()?;
    }
    Ok(buf.into_inner())
}

pub fn write_wav(path: &Path, block: &AudioBlock) -> Result<(), WavError> {
    std::fs::write(path, encode_wav(block)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_samples() {
        let block = AudioBlock {
            sample_rate: 48_000,
            samples: vec![0.0, 1.0, -1.0, 0.5],
        };
        let bytes = encode_wav(&block).unwrap();
        assert_eq!(&bytes[0..4], b"RIFF");
        assert_eq!(&bytes[8..12], b"WAVE");
        assert_eq!(bytes.len(), 44 + 8);
        // fmt: PCM, mono, 48 kHz, 16-bit
        assert_eq!(u16::from_le_bytes([bytes[20], bytes[21]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[22], bytes[23]]), 1);
        assert_eq!(u32::from_le_bytes(bytes[24..28].try_into().unwrap()), 48_000);
        assert_eq!(u16::from_le_bytes([bytes[34], bytes[35]]), 16);
        let data: Vec<i16> = bytes[44..]
            .chunks(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(data, vec![0, 32767, -32767, 16384]);
    }
}
