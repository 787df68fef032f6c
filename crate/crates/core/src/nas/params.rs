//! Parameter counting. Every convolution carries a bias; there are no
//! normalization parameters.
//!
//! A backbone of depth `D` has levels `0..D` with widths `C_l = base * 2^l`.
//! Cells sit at encoder levels `0..D` and decoder levels `0..D-1`, each
//! operating at its level's width. With `fixed_layers` the backbone adds:
//!
//! | layer                                  | count per instance          |
//! |----------------------------------------|-----------------------------|
//! | stem, 3x3 `in -> C_0`                  | `9 in C_0 + C_0`            |
//! | down, 3x3 stride 2 `C_l -> C_{l+1}`    | `9 C_l C_{l+1} + C_{l+1}`   |
//! | up, 2x2 transposed `C_{l+1} -> C_l`    | `4 C_{l+1} C_l + C_l`       |
//! | skip fuse, 1x1 `2 C_l -> C_l`          | `2 C_l C_l + C_l`           |
//! | head, 1x1 `C_0 -> out`                 | `C_0 out + out`             |
//!
//! with one down, up and fuse layer per level transition.

use alloc::format;

use super::{CellKind, Genotype};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackboneConfig {
    pub depth: usize,
    pub base_channels: u64,
    pub nodes_per_cell: usize,
    pub in_channels: u64,
    pub out_channels: u64,
    pub fixed_layers: bool,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        Self {
            depth: 4,
            base_channels: 16,
            nodes_per_cell: 4,
            in_channels: 1,
            out_channels: 1,
            fixed_layers: true,
        }
    }
}

impl BackboneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.base_channels == 0 || self.nodes_per_cell == 0 {
            return Err(Error::InvalidConfig(
                "backbone depth, base channels and nodes per cell must be positive".into(),
            ));
        }
        let widest = self.base_channels.checked_shl(self.depth as u32 - 1);
        let max_io = self.in_channels.max(self.out_channels);
        if self.depth > 32 || widest.is_none_or(|w| w > 1 << 20) || max_io > 1 << 20 {
            return Err(Error::InvalidConfig(format!(
                "backbone of depth {} and base width {} is too wide to count",
                self.depth, self.base_channels
            )));
        }
        Ok(())
    }

    pub fn width(&self, level: usize) -> u64 {
        self.base_channels << level
    }

    /// Parameters of the non-searched layers (0 when `fixed_layers` is off).
    pub fn fixed_param_count(&self) -> u64 {
        if !self.fixed_layers {
            return 0;
        }
        let c0 = self.width(0);
        let mut n = 9 * self.in_channels * c0 + c0;
        n += c0 * self.out_channels + self.out_channels;
        for l in 0..self.depth - 1 {
            let (c, c2) = (self.width(l), self.width(l + 1));
            n += 9 * c * c2 + c2;
            n += 4 * c2 * c + c;
            n += 2 * c * c + c;
        }
        n
    }
}

/// Sum of operation parameters of one cell at width `c`.
pub fn cell_param_count(g: &Genotype, c: u64) -> u64 {
    g.ops().map(|op| op.param_count(c)).sum()
}

fn check_nodes(g: &Genotype, b: &BackboneConfig) -> Result<()> {
    if g.n_nodes() != b.nodes_per_cell {
        return Err(Error::InvalidConfig(format!(
            "genotype has {} nodes but the backbone expects {}",
            g.n_nodes(),
            b.nodes_per_cell
        )));
    }
    Ok(())
}

fn total(encoder: &Genotype, decoder: &Genotype, b: &BackboneConfig) -> u64 {
    let enc: u64 = (0..b.depth)
        .map(|l| cell_param_count(encoder, b.width(l)))
        .sum();
    let dec: u64 = (0..b.depth - 1)
        .map(|l| cell_param_count(decoder, b.width(l)))
        .sum();
    enc + dec + b.fixed_param_count()
}

/// Backbone with one shared encoder genotype and one shared decoder genotype.
pub fn unet_param_count(encoder: &Genotype, decoder: &Genotype, b: &BackboneConfig) -> Result<u64> {
    b.validate()?;
    if encoder.kind() != CellKind::Encoder || decoder.kind() != CellKind::Decoder {
        return Err(Error::InvalidConfig(
            "expected an encoder genotype and a decoder genotype".into(),
        ));
    }
    check_nodes(encoder, b)?;
    check_nodes(decoder, b)?;
    Ok(total(encoder, decoder, b))
}

/// Backbone with `g` at every cell position, whatever its kind.
pub fn param_count(g: &Genotype, b: &BackboneConfig) -> Result<u64> {
    b.validate()?;
    check_nodes(g, b)?;
    Ok(total(g, g, b))
}
