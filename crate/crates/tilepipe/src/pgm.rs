//! Binary 8-bit portable graymap (P5) reading and writing, plus directory
//! sequence loading. The format is trivially parseable anywhere and
//! bit-exact, which keeps exported frames diffable.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::FrameDims;
use crate::gray::GrayImage;

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt image: {reason}")]
    CorruptImage { path: PathBuf, reason: String },
    #[error("{path}: {width}x{height} does not match sequence dimensions {expected_width}x{expected_height}")]
    MixedDimensions {
        path: PathBuf,
        width: u32,
        height: u32,
        expected_width: u32,
        expected_height: u32,
    },
    #[error("{0}: directory contains no .pgm files")]
    EmptyDirectory(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PgmError + '_ {
    move |source| PgmError::Io { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: &str) -> PgmError {
    PgmError::CorruptImage { path: path.to_path_buf(), reason: reason.to_string() }
}

/// Serialize to P5 bytes: intensity in [0,1] maps linearly onto 0..=255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), PgmError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(&encode_pgm(img)).map_err(io_err(path))?;
    Ok(())
}

/// Parse P5 bytes; `#` comments in the header are honored.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage, PgmError> {
    let mut pos = 0usize;
    let mut token = |what: &str| -> Result<String, PgmError> {
        // skip whitespace and comment lines
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt(path, &format!("missing {what}")));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };

    if token("magic")? != "P5" {
        return Err(corrupt(path, "not a binary graymap (magic != P5)"));
    }
    let width: usize =
        token("width")?.parse().map_err(|_| corrupt(path, "bad width"))?;
    let height: usize =
        token("height")?.parse().map_err(|_| corrupt(path, "bad height"))?;
    let maxval: u32 = token("maxval")?.parse().map_err(|_| corrupt(path, "bad maxval"))?;
    if width == 0 || height == 0 {
        return Err(corrupt(path, "zero dimension"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(corrupt(path, "only 8-bit graymaps supported"));
    }
    // exactly one whitespace byte separates header and raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(corrupt(path, "missing raster separator"));
    }
    pos += 1;
    let need = width * height;
    if bytes.len() - pos < need {
        return Err(corrupt(path, "truncated raster data"));
    }
    let maxval = maxval as f32;
    let data = bytes[pos..pos + need].iter().map(|&b| b as f32 / maxval).collect();
    Ok(GrayImage::from_raw(width, height, data))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage, PgmError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_pgm(&bytes, path)
}

/// Filenames of the `.pgm` members of a directory, sorted; the sort is
/// lexicographic, which equals numeric order for zero-padded names.
pub fn sequence_paths(dir: &Path) -> Result<Vec<PathBuf>, PgmError> {
    let entries = fs::read_dir(dir).map_err(io_err(dir))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "pgm").unwrap_or(false))
        .collect();
    if paths.is_empty() {
        return Err(PgmError::EmptyDirectory(dir.to_path_buf()));
    }
    paths.sort();
    Ok(paths)
}

/// Eagerly load a whole numbered sequence, enforcing uniform dimensions.
pub fn load_sequence(dir: &Path) -> Result<(Vec<GrayImage>, FrameDims), PgmError> {
    let paths = sequence_paths(dir)?;
    let mut frames = Vec::with_capacity(paths.len());
    let mut dims: Option<FrameDims> = None;
    for path in &paths {
        let img = read_pgm(path)?;
        let this = FrameDims::new(img.width() as u32, img.height() as u32);
        match dims {
            None => dims = Some(this),
            Some(d) if d != this => {
                return Err(PgmError::MixedDimensions {
                    path: path.clone(),
                    width: this.width,
                    height: this.height,
                    expected_width: d.width,
                    expected_height: d.height,
                });
            }
            _ => {}
        }
        frames.push(img);
    }
    Ok((frames, dims.expect("nonempty sequence")))
}
