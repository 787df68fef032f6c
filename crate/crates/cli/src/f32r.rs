//! F32R raster files.
//!
//! A 32-byte little-endian header followed by `rows * cols` row-major `f32`:
//!
//! | offset | size | field                                    |
//! |--------|------|------------------------------------------|
//! | 0      | 4    | magic `F32R`                             |
//! | 4      | 2    | version (1)                              |
//! | 6      | 2    | kind: 0 field, 1 gather                  |
//! | 8      | 4    | rows                                     |
//! | 12     | 4    | cols                                     |
//! | 16     | 8    | meta 0: `dz` (field) or `dt` (gather)    |
//! | 24     | 8    | meta 1: `dx` (field) or receiver depth   |

use std::path::Path;

use seiswork_core::velmodel::{Grid2D, VelocityModel};
use seiswork_core::wavesim::ShotGather;
use seiswork_core::Field;

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"F32R";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Field = 0,
    Gather = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub kind: Kind,
    pub rows: usize,
    pub cols: usize,
    pub meta: [f64; 2],
    pub data: Vec<f32>,
}

impl Raster {
    pub fn new(
        kind: Kind,
        rows: usize,
        cols: usize,
        meta: [f64; 2],
        data: Vec<f32>,
    ) -> Result<Self> {
        if u32::try_from(rows).is_err() || u32::try_from(cols).is_err() {
            return Err(CliError::Format(format!(
                "dimensions {rows}x{cols} exceed u32"
            )));
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(CliError::Format(format!(
                "{rows}x{cols} raster needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        Ok(Self {
            kind,
            rows,
            cols,
            meta,
            data,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.kind as u16).to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        out.extend_from_slice(&self.meta[0].to_le_bytes());
        out.extend_from_slice(&self.meta[1].to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CliError::Format(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(CliError::Format(format!("bad magic {:?}", &bytes[0..4])));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let version = u16_at(4);
        if version != VERSION {
            return Err(CliError::Format(format!("unsupported version {version}")));
        }
        let kind = match u16_at(6) {
            0 => Kind::Field,
            1 => Kind::Gather,
            k => return Err(CliError::Format(format!("unknown kind {k}"))),
        };
        let (rows, cols) = (u32_at(8) as usize, u32_at(12) as usize);
        let payload = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| CliError::Format(format!("dimensions {rows}x{cols} overflow")))?;
        let body = &bytes[HEADER_LEN..];
        if body.len() < payload {
            return Err(CliError::Format(format!(
                "truncated payload: {rows}x{cols} needs {payload} bytes, found {}",
                body.len()
            )));
        }
        if body.len() > payload {
            return Err(CliError::Format(format!(
                "{} trailing bytes after the payload",
                body.len() - payload
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self {
            kind,
            rows,
            cols,
            meta: [f64_at(16), f64_at(24)],
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            CliError::Format(msg) => CliError::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Writes the file and returns its bytes (for checksumming).
    pub fn write(&self, path: &Path) -> Result<Vec<u8>> {
        let bytes = self.to_bytes();
        std::fs::write(path, &bytes).map_err(|e| CliError::io(path, e))?;
        Ok(bytes)
    }

    pub fn to_field(&self) -> Field {
        Field::from_fn(self.rows, self.cols, |j, i| {
            self.data[j * self.cols + i] as f64
        })
    }

    pub fn from_field(kind: Kind, f: &Field, meta: [f64; 2]) -> Self {
        Self {
            kind,
            rows: f.rows(),
            cols: f.cols(),
            meta,
            data: f.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }

    /// Field raster for a velocity model or image on `grid`.
    pub fn from_grid_field(grid: &Grid2D, f: &Field) -> Self {
        Self::from_field(Kind::Field, f, [grid.dz, grid.dx])
    }

    pub fn from_gather(g: &ShotGather, receiver_z: f64) -> Self {
        Self::from_field(Kind::Gather, &g.data, [g.dt, receiver_z])
    }

    fn expect(&self, kind: Kind) -> Result<()> {
        if self.kind != kind {
            return Err(CliError::Config(format!(
                "expected a {kind:?} raster, found {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn to_velocity_model(&self) -> Result<VelocityModel> {
        self.expect(Kind::Field)?;
        let grid = Grid2D::new(self.cols, self.rows, self.meta[1], self.meta[0])?;
        Ok(VelocityModel::new(grid, self.to_field())?)
    }

    /// Gather with the given receiver positions; the sample interval comes from the header.
    pub fn to_gather(&self, receiver_xs: Vec<f64>) -> Result<ShotGather> {
        self.expect(Kind::Gather)?;
        Ok(ShotGather::new(self.to_field(), self.meta[0], receiver_xs)?)
    }
}
