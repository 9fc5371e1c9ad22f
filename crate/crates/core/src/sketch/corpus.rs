//! Training corpora: a seeded synthetic sketch generator and PGM file I/O.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{affine_transform, rasterize, Point, Raster, SketchFrame, Stroke};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed PGM {path}: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },
    #[error("raster in {0} is not square")]
    NotSquare(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    }
}

fn circle_points(cx: f64, cy: f64, r: f64, start: f64, sweep: f64, n: usize) -> Stroke {
    (0..=n)
        .map(|i| {
            let a = start + sweep * i as f64 / n as f64;
            Point::new(cx + r * a.cos(), cy + r * a.sin(), i as f64 * 16.0)
        })
        .collect()
}

/// One synthetic sketch: a circle, line, or arc under a random affine
/// transform.
pub fn synthetic_frame<R: Rng + ?Sized>(rng: &mut R) -> SketchFrame {
    let stroke = match rng.gen_range(0..3) {
        0 => {
            let r = rng.gen_range(0.1..0.35);
            let n = rng.gen_range(24..48);
            circle_points(0.5, 0.5, r, 0.0, TAU, n)
        }
        1 => {
            let a = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
            let b = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
            [Point::new(a.0, a.1, 0.0), Point::new(b.0, b.1, 200.0)]
                .into_iter()
                .collect()
        }
        _ => {
            let r = rng.gen_range(0.15..0.4);
            let sweep = rng.gen_range(0.5 * PI..1.5 * PI);
            let start = rng.gen_range(0.0..TAU);
            circle_points(0.5, 0.5, r, start, sweep, 24)
        }
    };
    let frame = SketchFrame::from_strokes(vec![stroke]);
    let rotation = rng.gen_range(-PI..PI);
    let scale = rng.gen_range(0.6..1.3);
    let translate = (rng.gen_range(-0.15..0.15), rng.gen_range(-0.15..0.15));
    affine_transform(&frame, rotation, scale, translate).expect("scale is positive")
}

/// `count` synthetic sketches, reproducible from `seed`.
pub fn synthetic_frames(count: usize, seed: u64) -> Vec<SketchFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| synthetic_frame(&mut rng)).collect()
}

/// [`synthetic_frames`], rasterized.
pub fn synthetic_corpus(count: usize, resolution: usize, seed: u64) -> Vec<Raster> {
    synthetic_frames(count, seed)
        .iter()
        .map(|f| rasterize(f, resolution).expect("resolution validated by caller"))
        .collect()
}

/// Writes a binary PGM (P5, maxval 255).
pub fn write_pgm(path: &Path, raster: &Raster) -> Result<(), CorpusError> {
    let r = raster.resolution();
    let mut out = format!("P5\n{r} {r}\n255\n").into_bytes();
    out.extend(raster.pixels().iter().map(|&p| (p * 255.0).round() as u8));
    fs::write(path, out).map_err(io_err(path))
}

pub fn read_pgm(path: &Path) -> Result<Raster, CorpusError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let bad = |reason: &str| CorpusError::MalformedPgm {
        path: path.to_owned(),
        reason: reason.to_owned(),
    };

    // Header: magic, width, height, maxval separated by whitespace; '#'
    // starts a comment running to end of line.
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII header"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a P5 file"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(bad("only 8-bit maxval is supported"));
    }
    if w != h {
        return Err(CorpusError::NotSquare(path.to_owned()));
    }
    // exactly one whitespace byte before the raster
    pos += 1;
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| bad("truncated pixel data"))?;
    let pixels = data.iter().map(|&b| b as f64 / maxval as f64).collect();
    Raster::from_pixels(w, pixels).map_err(|e| bad(&e.to_string()))
}

/// Writes each raster as `NNNNN.pgm` under `dir` plus a `manifest.txt`
/// listing the file names, one per line. Returns the manifest path.
pub fn write_corpus(dir: &Path, rasters: &[Raster]) -> Result<PathBuf, CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = String::new();
    for (i, r) in rasters.iter().enumerate() {
        let name = format!("{i:05}.pgm");
        write_pgm(&dir.join(&name), r)?;
        manifest.push_str(&name);
        manifest.push('\n');
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(io_err(&path))?;
    Ok(path)
}

/// Reads every raster listed in a manifest. Relative entries resolve
/// against the manifest's directory; blank lines are skipped.
pub fn read_corpus_manifest(manifest: &Path) -> Result<Vec<Raster>, CorpusError> {
    let text = fs::read_to_string(manifest).map_err(io_err(manifest))?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| read_pgm(&base.join(l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpus_is_seeded() {
        let a = synthetic_corpus(20, 32, 7);
        let b = synthetic_corpus(20, 32, 7);
        let c = synthetic_corpus(20, 32, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|r| r.ink() > 0));
    }

    #[test]
    fn pgm_round_trip_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let rasters = synthetic_corpus(3, 16, 1);
        let manifest = write_corpus(dir.path(), &rasters).unwrap();
        let back = read_corpus_manifest(&manifest).unwrap();
        assert_eq!(back, rasters);
    }

    #[test]
    fn pgm_quantizes_to_255_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        let mut px = vec![0.0; 64];
        px[1] = 0.5;
        write_pgm(&path, &Raster::from_pixels(8, px).unwrap()).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n8 8\n255\n"));
        assert_eq!(bytes[11 + 1], 128);
        let back = read_pgm(&path).unwrap();
        assert_eq!(back.pixels()[1], 128.0 / 255.0);
    }

    #[test]
    fn pgm_header_comments() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# made by hand\n8 8\n255\n".to_vec();
        bytes.extend(std::iter::repeat(255).take(64));
        fs::write(&path, bytes).unwrap();
        assert_eq!(read_pgm(&path).unwrap().ink(), 64);
    }

    #[test]
    fn malformed_pgm() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, b"P2\n8 8\n255\n").unwrap();
        assert!(matches!(read_pgm(&path), Err(CorpusError::MalformedPgm { .. })));
        fs::write(&path, b"P5\n8 8\n255\n\x00\x01").unwrap();
        assert!(matches!(read_pgm(&path), Err(CorpusError::MalformedPgm { .. })));
        fs::write(&path, b"P5\n8 4\n255\n").unwrap();
        assert!(matches!(read_pgm(&path), Err(CorpusError::NotSquare(_))));
    }
}
