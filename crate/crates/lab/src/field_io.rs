//! On-disk field formats.
//!
//! JSON:
//!
//! ```json
//! {
//!   "format": "shear-field", "version": 1,
//!   "representation": "grid",          // or "spectral"
//!   "n_points": 256, "domain_length": 6.283185307179586, "origin": -3.141592653589793,
//!   "is_real": true,
//!   "values": [re_0, im_0, re_1, im_1, ...]
//! }
//! ```
//!
//! Grid files list samples at `y_j = origin + j * domain_length / n_points`.
//! Spectral files list coefficients by ascending mode `-N/2, ..., N/2 - 1`
//! with `c_m = (1/N) sum_j f(y_j) e^{-i m y_j}`.
//!
//! Binary (little endian, `16 + 16 N` bytes):
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `SHF1`                              |
//! | 4      | 1    | representation: 0 grid, 1 spectral        |
//! | 5      | 1    | 1 if the field is real, else 0            |
//! | 6      | 2    | reserved, zero                            |
//! | 8      | 8    | `n_points` as `u64`                       |
//! | 16     | 16 N | `f64` pairs `(re, im)` in the JSON order  |
//!
//! The domain is always `[-pi, pi)` so the binary header does not repeat it.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use shear_core::{Grid, GridField, SpectralField};

pub const MAGIC: &[u8; 4] = b"SHF1";
const FORMAT: &str = "shear-field";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Grid,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Json,
    Binary,
}

impl Encoding {
    /// `.bin` selects the binary layout, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Encoding::Binary,
            _ => Encoding::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub format: String,
    pub version: u32,
    pub representation: Representation,
    pub n_points: usize,
    pub domain_length: f64,
    pub origin: f64,
    pub is_real: bool,
    pub values: Vec<f64>,
}

/// A field as read from disk, in whichever representation it was stored.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredField {
    Grid(GridField),
    Spectral(SpectralField),
}

impl StoredField {
    pub fn into_grid(self) -> GridField {
        match self {
            StoredField::Grid(g) => g,
            StoredField::Spectral(s) => {
                let g = s.to_grid();
                if s.is_conjugate_symmetric(1e-12) {
                    g.real_part()
                } else {
                    g
                }
            }
        }
    }

    pub fn into_spectral(self) -> SpectralField {
        match self {
            StoredField::Grid(g) => g.to_spectral(),
            StoredField::Spectral(s) => s,
        }
    }
}

fn interleave(values: &[Complex64]) -> Vec<f64> {
    values.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn deinterleave(flat: &[f64]) -> Vec<Complex64> {
    flat.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Coefficients in ascending mode order.
fn ascending(s: &SpectralField) -> Vec<Complex64> {
    let n = s.grid().n_points() as i64;
    (-n / 2..n / 2).map(|m| s.coeff(m)).collect()
}

fn from_ascending(grid: Grid, values: Vec<Complex64>) -> Result<SpectralField> {
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (j, c) in values.into_iter().enumerate() {
        let m = j as i64 - (n / 2) as i64;
        coeffs[grid.index(m).expect("mode in range")] = c;
    }
    Ok(SpectralField::new(grid, coeffs)?)
}

impl FieldFile {
    pub fn from_grid(f: &GridField) -> Self {
        Self::build(Representation::Grid, f.grid(), f.is_real(), interleave(f.values()))
    }

    pub fn from_spectral(f: &SpectralField) -> Self {
        let real = f.is_conjugate_symmetric(1e-12);
        Self::build(Representation::Spectral, f.grid(), real, interleave(&ascending(f)))
    }

    fn build(representation: Representation, grid: Grid, is_real: bool, values: Vec<f64>) -> Self {
        FieldFile {
            format: FORMAT.into(),
            version: 1,
            representation,
            n_points: grid.n_points(),
            domain_length: Grid::DOMAIN_LENGTH,
            origin: Grid::ORIGIN,
            is_real,
            values,
        }
    }

    pub fn decode(self) -> Result<StoredField> {
        ensure!(self.format == FORMAT, "not a field file (format {:?})", self.format);
        ensure!(self.version == 1, "unsupported field file version {}", self.version);
        ensure!(
            (self.domain_length - Grid::DOMAIN_LENGTH).abs() < 1e-12 && (self.origin - Grid::ORIGIN).abs() < 1e-12,
            "only the torus [-pi, pi) is supported"
        );
        let grid = Grid::new(self.n_points)?;
        ensure!(
            self.values.len() == 2 * self.n_points,
            "expected {} interleaved values, found {}",
            2 * self.n_points,
            self.values.len()
        );
        let values = deinterleave(&self.values);
        Ok(match self.representation {
            Representation::Grid => {
                let f = GridField::new(grid, values)?;
                StoredField::Grid(if self.is_real { f.real_part() } else { f })
            }
            Representation::Spectral => StoredField::Spectral(from_ascending(grid, values)?),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.push(match self.representation {
            Representation::Grid => 0,
            Representation::Spectral => 1,
        });
        out.push(self.is_real as u8);
        out.extend_from_slice(&[0, 0]);
        out.extend_from_slice(&(self.n_points as u64).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        ensure!(bytes.len() >= HEADER_LEN && &bytes[..4] == MAGIC, "missing SHF1 header");
        let representation = match bytes[4] {
            0 => Representation::Grid,
            1 => Representation::Spectral,
            r => bail!("unknown representation byte {r}"),
        };
        let is_real = match bytes[5] {
            0 => false,
            1 => true,
            r => bail!("bad real flag {r}"),
        };
        let n_points = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = &bytes[HEADER_LEN..];
        ensure!(
            n_points.checked_mul(16) == Some(body.len()),
            "payload holds {} bytes, header announces {n_points} points",
            body.len()
        );
        let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Ok(Self::build(representation, Grid::new(n_points)?, is_real, values))
    }
}

/// Reads either encoding, sniffing the binary magic.
pub fn read_field(path: &Path) -> Result<StoredField> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file = if bytes.starts_with(MAGIC) {
        FieldFile::from_bytes(&bytes)?
    } else {
        serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))?
    };
    file.decode().with_context(|| format!("decoding {}", path.display()))
}

pub fn write_file(path: &Path, file: &FieldFile) -> Result<()> {
    let bytes = match Encoding::from_path(path) {
        Encoding::Binary => file.to_bytes(),
        Encoding::Json => serde_json::to_vec(file)?,
    };
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_grid(path: &Path, f: &GridField) -> Result<()> {
    write_file(path, &FieldFile::from_grid(f))
}

pub fn write_spectral(path: &Path, f: &SpectralField) -> Result<()> {
    write_file(path, &FieldFile::from_spectral(f))
}
