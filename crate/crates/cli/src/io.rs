//! File formats: one-column CSV for signals, PGM (P2/P5, maxval ≤ 255) for
//! images, and full-precision grid/γ persistence with JSON sidecars.
//!
//! CSV round-trips exactly (values are written in shortest round-trip form);
//! PGM round-trips exactly for integer grids in `[0, 255]`. A grid stored as
//! CSV may carry a `.json` sidecar with its dimensions and spacing; γ maps
//! additionally record the scale of their `[0, 255]` PGM preview.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tvpwl::{GammaMap, GridGeometry, ScalarGrid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path} (offset {offset}): {message}")]
    Pgm {
        path: PathBuf,
        offset: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Sidecar { path: PathBuf, message: String },

    #[error(transparent)]
    Grid(#[from] tvpwl::Error),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

// ---------------------------------------------------------------- CSV -----

/// A one-column CSV signal: one value per line, optional single header line.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFile {
    pub header: Option<String>,
    pub values: Vec<f64>,
}

pub fn read_csv(path: &Path) -> IoResult<SignalFile> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let mut header = None;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(IoError::Csv {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) => {
                if idx == 0 && header.is_none() {
                    header = Some(line.to_string());
                } else {
                    return Err(IoError::Csv {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        message: format!("cannot parse {line:?} as a number"),
                    });
                }
            }
        }
    }
    Ok(SignalFile { header, values })
}

pub fn write_csv(path: &Path, signal: &SignalFile) -> IoResult<()> {
    let mut out = String::new();
    if let Some(h) = &signal.header {
        out.push_str(h);
        out.push('\n');
    }
    for v in &signal.values {
        // Display of f64 is shortest round-trip, so read(write(x)) == x.
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out).map_err(|e| file_err(path, e))
}

// ---------------------------------------------------------------- PGM -----

/// An 8-bit grayscale PGM image (P2 ASCII or P5 binary on disk).
#[derive(Debug, Clone, PartialEq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u8>,
}

impl PgmImage {
    pub fn to_grid(&self) -> IoResult<ScalarGrid> {
        let g = GridGeometry::rect(self.height, self.width)?;
        let vals = self.pixels.iter().map(|&p| p as f64).collect();
        Ok(ScalarGrid::from_values(g, vals)?)
    }

    /// Quantize a grid into a PGM image; every value must round into
    /// `[0, maxval]`.
    pub fn from_grid(grid: &ScalarGrid, path_for_errors: &Path) -> IoResult<Self> {
        if grid.geometry().ndim() != 2 {
            return Err(IoError::Sidecar {
                path: path_for_errors.to_path_buf(),
                message: "PGM output requires a 2D grid".into(),
            });
        }
        let dims = grid.geometry().dims();
        let mut pixels = Vec::with_capacity(grid.values().len());
        for (i, &v) in grid.values().iter().enumerate() {
            let r = v.round();
            if !(0.0..=255.0).contains(&r) {
                return Err(IoError::Sidecar {
                    path: path_for_errors.to_path_buf(),
                    message: format!("value {v} at flat index {i} outside [0, 255]"),
                });
            }
            pixels.push(r as u8);
        }
        Ok(Self {
            width: dims[1],
            height: dims[0],
            maxval: 255,
            pixels,
        })
    }
}

struct PgmParser<'a> {
    path: &'a Path,
    data: &'a [u8],
    pos: usize,
}

impl<'a> PgmParser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> IoResult<T> {
        Err(IoError::Pgm {
            path: self.path.to_path_buf(),
            offset: self.pos,
            message: message.into(),
        })
    }

    /// Skip whitespace and `#` comments.
    fn skip_separators(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_number(&mut self, what: &str) -> IoResult<usize> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err(format!("expected {what}"));
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).unwrap();
        text.parse::<usize>()
            .map_err(|_| IoError::Pgm {
                path: self.path.to_path_buf(),
                offset: start,
                message: format!("invalid {what}: {text}"),
            })
    }
}

pub fn read_pgm(path: &Path) -> IoResult<PgmImage> {
    let data = fs::read(path).map_err(|e| file_err(path, e))?;
    let mut p = PgmParser {
        path,
        data: &data,
        pos: 0,
    };
    if data.len() < 2 {
        return p.err("truncated header");
    }
    let binary = match &data[..2] {
        b"P2" => false,
        b"P5" => true,
        magic => {
            return p.err(format!(
                "unsupported magic {:?} (PGM P2/P5 only)",
                String::from_utf8_lossy(magic)
            ))
        }
    };
    p.pos = 2;
    let width = p.next_number("width")?;
    let height = p.next_number("height")?;
    let maxval = p.next_number("maxval")?;
    if width == 0 || height == 0 {
        return p.err("zero image dimension");
    }
    if maxval == 0 || maxval > 255 {
        return p.err(format!("maxval {maxval} outside 1..=255"));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        if p.pos >= data.len() || !data[p.pos].is_ascii_whitespace() {
            return p.err("missing separator before binary raster");
        }
        p.pos += 1;
        if data.len() - p.pos < count {
            return p.err(format!(
                "truncated raster: expected {count} bytes, found {}",
                data.len() - p.pos
            ));
        }
        for &b in &data[p.pos..p.pos + count] {
            if b as usize > maxval {
                return p.err(format!("sample {b} exceeds maxval {maxval}"));
            }
            pixels.push(b);
        }
    } else {
        for _ in 0..count {
            let v = p.next_number("sample")?;
            if v > maxval {
                return p.err(format!("sample {v} exceeds maxval {maxval}"));
            }
            pixels.push(v as u8);
        }
    }
    Ok(PgmImage {
        width,
        height,
        maxval: maxval as u16,
        pixels,
    })
}

pub fn write_pgm(path: &Path, image: &PgmImage, binary: bool) -> IoResult<()> {
    let mut out: Vec<u8> = Vec::new();
    let magic = if binary { "P5" } else { "P2" };
    out.extend_from_slice(format!("{magic}\n{} {}\n{}\n", image.width, image.height, image.maxval).as_bytes());
    if binary {
        out.extend_from_slice(&image.pixels);
    } else {
        for row in image.pixels.chunks(image.width) {
            let line: Vec<String> = row.iter().map(|p| p.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    }
    let mut f = fs::File::create(path).map_err(|e| file_err(path, e))?;
    f.write_all(&out).map_err(|e| file_err(path, e))
}

// ------------------------------------------------------------- sidecar ----

/// JSON sidecar describing a grid stored as flat CSV, and for γ maps the
/// scale of the quantized PGM preview (`value = pixel * preview_scale`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preview_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub preview_offset: Option<f64>,
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write a grid as flat CSV plus a sidecar with its geometry.
pub fn write_grid_csv(path: &Path, grid: &ScalarGrid) -> IoResult<()> {
    write_csv(
        path,
        &SignalFile {
            header: None,
            values: grid.values().to_vec(),
        },
    )?;
    let sidecar = GridSidecar {
        dims: grid.geometry().dims().to_vec(),
        spacing: grid.geometry().spacing().to_vec(),
        preview_scale: None,
        preview_offset: None,
    };
    write_sidecar(&sidecar_path(path), &sidecar)
}

fn write_sidecar(path: &Path, sidecar: &GridSidecar) -> IoResult<()> {
    let text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(path, text + "\n").map_err(|e| file_err(path, e))
}

fn read_sidecar(path: &Path) -> IoResult<Option<GridSidecar>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    let sidecar = serde_json::from_str(&text).map_err(|e| IoError::Sidecar {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(Some(sidecar))
}

/// Read a grid from flat CSV; geometry comes from the sidecar when present,
/// otherwise the file is a 1D signal with unit spacing.
pub fn read_grid_csv(path: &Path) -> IoResult<ScalarGrid> {
    let signal = read_csv(path)?;
    match read_sidecar(&sidecar_path(path))? {
        Some(sc) => {
            let g = GridGeometry::with_spacing(&sc.dims, &sc.spacing)?;
            Ok(ScalarGrid::from_values(g, signal.values)?)
        }
        None => {
            let g = GridGeometry::line(signal.values.len())?;
            Ok(ScalarGrid::from_values(g, signal.values)?)
        }
    }
}

/// Persist a γ map at full precision (CSV + sidecar) together with a PGM
/// preview scaled to `[0, 255]` for 2D maps. Returns the preview path, if
/// one was written.
pub fn write_gamma_map(csv_path: &Path, gamma: &ScalarGrid) -> IoResult<Option<PathBuf>> {
    write_csv(
        csv_path,
        &SignalFile {
            header: None,
            values: gamma.values().to_vec(),
        },
    )?;
    let max = gamma.values().iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut sidecar = GridSidecar {
        dims: gamma.geometry().dims().to_vec(),
        spacing: gamma.geometry().spacing().to_vec(),
        preview_scale: None,
        preview_offset: None,
    };
    let mut preview = None;
    if gamma.geometry().ndim() == 2 {
        let scale = if max > 0.0 { max / 255.0 } else { 1.0 };
        let preview_vals: Vec<f64> = gamma.values().iter().map(|v| v / scale).collect();
        let preview_grid =
            ScalarGrid::from_values(gamma.geometry().clone(), preview_vals)?;
        let pgm_path = csv_path.with_extension("pgm");
        let image = PgmImage::from_grid(&preview_grid, &pgm_path)?;
        write_pgm(&pgm_path, &image, true)?;
        sidecar.preview_scale = Some(scale);
        preview = Some(pgm_path);
    }
    write_sidecar(&sidecar_path(csv_path), &sidecar)?;
    Ok(preview)
}

/// Load a γ map from `.csv` (full precision, sidecar-aware) or `.pgm`
/// (quantized; the sidecar's `preview_scale` restores the physical scale).
pub fn read_gamma_map(path: &Path) -> IoResult<GammaMap> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let grid = if ext.eq_ignore_ascii_case("pgm") {
        let image = read_pgm(path)?;
        let scale = read_sidecar(&sidecar_path(path))?
            .and_then(|s| s.preview_scale)
            .unwrap_or(1.0);
        let g = GridGeometry::rect(image.height, image.width)?;
        let vals = image.pixels.iter().map(|&p| p as f64 * scale).collect();
        ScalarGrid::from_values(g, vals)?
    } else {
        read_grid_csv(path)?
    };
    Ok(GammaMap::from_grid(grid)?)
}

/// Read a signal or image from disk by extension: `.pgm` is a 2D image,
/// anything else is CSV (sidecar-aware).
pub fn read_input_grid(path: &Path) -> IoResult<ScalarGrid> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext.eq_ignore_ascii_case("pgm") {
        read_pgm(path)?.to_grid()
    } else {
        read_grid_csv(path)
    }
}
