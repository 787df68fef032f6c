//! Binary PGM (P5) rendering of a raster.

use crate::error::{CliError, Result};
use crate::f32r::Raster;

/// Min-max normalized 8-bit levels. A constant raster maps to 128.
pub fn gray_levels(values: &[f32]) -> Result<Vec<u8>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Format("cannot render non-finite values".into()));
    }
    let lo = values.iter().copied().fold(f32::INFINITY, f32::min) as f64;
    let hi = values.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    if hi <= lo {
        return Ok(vec![128; values.len()]);
    }
    Ok(values
        .iter()
        .map(|&v| ((v as f64 - lo) / (hi - lo) * 255.0).round() as u8)
        .collect())
}

pub fn to_pgm(r: &Raster) -> Result<Vec<u8>> {
    let mut out = format!("P5\n{} {}\n255\n", r.cols, r.rows).into_bytes();
    out.extend(gray_levels(&r.data)?);
    Ok(out)
}
