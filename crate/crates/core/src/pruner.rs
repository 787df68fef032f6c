//! One-shot magnitude ("level") pruning of a single weight tensor.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    values: Vec<f32>,
    shape: Vec<usize>,
}

impl WeightTensor {
    pub fn new(values: Vec<f32>, shape: Vec<usize>) -> Result<Self> {
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidConfig("tensor shape overflows".into()))?;
        if n != values.len() {
            return Err(Error::InvalidConfig(format!(
                "shape {shape:?} holds {n} values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight tensor"));
        }
        Ok(Self { values, shape })
    }

    /// One-dimensional tensor.
    pub fn from_values(values: Vec<f32>) -> Result<Self> {
        let n = values.len();
        Self::new(values, alloc::vec![n])
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneMask {
    pub keep: Vec<bool>,
}

impl PruneMask {
    pub fn pruned_count(&self) -> usize {
        self.keep.iter().filter(|k| !**k).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparsityTarget(f64);

impl SparsityTarget {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidConfig(format!(
                "sparsity fraction must lie in [0, 1], got {fraction}"
            )));
        }
        Ok(Self(fraction))
    }

    pub fn fraction(&self) -> f64 {
        self.0
    }

    /// `floor(fraction * n)`. The product is nudged by 1e-9 first so that
    /// fractions like 0.29 with n = 100 give 29 rather than 28.
    pub fn pruned_count(&self, n: usize) -> usize {
        let m = libm::floor(self.0 * n as f64 + 1e-9) as usize;
        m.min(n)
    }
}

/// Mark the `floor(fraction * n)` smallest-magnitude weights as pruned. Equal
/// magnitudes are pruned in increasing index order.
pub fn level_prune(w: &WeightTensor, s: SparsityTarget) -> PruneMask {
    let n = w.len();
    let m = s.pruned_count(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| {
        w.values[a]
            .abs()
            .total_cmp(&w.values[b].abs())
            .then(a.cmp(&b))
    });
    let mut keep = alloc::vec![true; n];
    for &i in &order[..m] {
        keep[i] = false;
    }
    PruneMask { keep }
}

/// Zero every pruned entry; kept entries are copied bit for bit.
pub fn apply_mask(w: &WeightTensor, m: &PruneMask) -> Result<WeightTensor> {
    if m.keep.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: (1, w.len()),
            found: (1, m.keep.len()),
        });
    }
    let values = w
        .values
        .iter()
        .zip(&m.keep)
        .map(|(&v, &k)| if k { v } else { 0.0 })
        .collect();
    Ok(WeightTensor {
        values,
        shape: w.shape.clone(),
    })
}

/// Fraction of entries that are exactly zero.
pub fn sparsity_of(w: &WeightTensor) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::TooSmall("sparsity of an empty tensor".into()));
    }
    let zeros = w.values.iter().filter(|v| **v == 0.0).count();
    Ok(zeros as f64 / w.len() as f64)
}
