//! Differentiable architecture search bookkeeping: candidate operations,
//! cell DAGs, softmax relaxation, discretization into genotypes and
//! parameter counting for a Unet backbone.
//!
//! A cell has `n_inputs` inputs and `n_nodes` intermediate nodes. Node `k`
//! receives one mixed edge from every input and from every earlier node.
//! Predecessors are labeled `0..n_inputs` for inputs and `n_inputs + k` for
//! node `k`. Edges are numbered node by node, predecessors in label order,
//! so node `k` owns edges `offset(k) .. offset(k) + n_inputs + k`.

mod genotype;
mod params;

pub use genotype::{Genotype, NodeEdges};
pub use params::{cell_param_count, param_count, unet_param_count, BackboneConfig};

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Candidate operations in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Conv3x3,
    /// 3x3 convolution with dilation 2.
    DilatedConv3x3,
    MaxPool3x3,
    AvgPool3x3,
    Identity,
    Zero,
}

pub const N_OPS: usize = 6;

impl Op {
    pub const ALL: [Op; N_OPS] = [
        Op::Conv3x3,
        Op::DilatedConv3x3,
        Op::MaxPool3x3,
        Op::AvgPool3x3,
        Op::Identity,
        Op::Zero,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Conv3x3 => "conv3x3",
            Op::DilatedConv3x3 => "dilated_conv3x3",
            Op::MaxPool3x3 => "max_pool3x3",
            Op::AvgPool3x3 => "avg_pool3x3",
            Op::Identity => "identity",
            Op::Zero => "zero",
        }
    }

    pub fn from_name(name: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Learnable parameters at `c` input and output channels (weights + bias).
    pub fn param_count(self, c: u64) -> u64 {
        match self {
            Op::Conv3x3 | Op::DilatedConv3x3 => 9 * c * c + c,
            Op::MaxPool3x3 | Op::AvgPool3x3 | Op::Identity | Op::Zero => 0,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    Encoder,
    Decoder,
}

impl CellKind {
    pub fn name(self) -> &'static str {
        match self {
            CellKind::Encoder => "encoder",
            CellKind::Decoder => "decoder",
        }
    }

    pub fn from_name(name: &str) -> Option<CellKind> {
        match name {
            "encoder" => Some(CellKind::Encoder),
            "decoder" => Some(CellKind::Decoder),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellSpec {
    pub n_nodes: usize,
    pub n_inputs: usize,
    pub kind: CellKind,
}

impl CellSpec {
    pub fn new(n_nodes: usize, kind: CellKind) -> Result<Self> {
        let spec = Self {
            n_nodes,
            n_inputs: 2,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(Error::InvalidConfig(
                "a cell needs at least one node".into(),
            ));
        }
        if self.n_inputs < 2 {
            return Err(Error::InvalidConfig(format!(
                "a cell needs at least two inputs, got {}",
                self.n_inputs
            )));
        }
        Ok(())
    }

    /// Number of predecessors of node `k`.
    pub fn in_degree(&self, k: usize) -> usize {
        self.n_inputs + k
    }

    /// Index of the first edge entering node `k`.
    pub fn edge_offset(&self, k: usize) -> usize {
        k * self.n_inputs + k * k.saturating_sub(1) / 2
    }

    pub fn n_edges(&self) -> usize {
        self.edge_offset(self.n_nodes)
    }
}

/// Architecture logits, one row of `N_OPS` per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMatrix {
    rows: Vec<[f64; N_OPS]>,
}

impl AlphaMatrix {
    pub fn new(rows: Vec<[f64; N_OPS]>) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("architecture logits"));
        }
        Ok(Self { rows })
    }

    /// From rows of arbitrary length (e.g. parsed CSV); each must have `N_OPS` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (e, r) in rows.iter().enumerate() {
            let row: [f64; N_OPS] =
                r.as_slice()
                    .try_into()
                    .map_err(|_| Error::DimensionMismatch {
                        expected: (e + 1, N_OPS),
                        found: (e + 1, r.len()),
                    })?;
            out.push(row);
        }
        Self::new(out)
    }

    pub fn rows(&self) -> &[[f64; N_OPS]] {
        &self.rows
    }

    pub fn n_edges(&self) -> usize {
        self.rows.len()
    }
}

/// Numerically stable softmax of one row.
pub fn softmax(row: &[f64; N_OPS]) -> [f64; N_OPS] {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = row.map(|v| libm::exp(v - m));
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= s);
    out
}

/// Row-wise softmax mixture weights.
pub fn relax(alpha: &AlphaMatrix) -> Vec<[f64; N_OPS]> {
    alpha.rows.iter().map(softmax).collect()
}

/// Most likely non-`zero` operation of one edge and its mixture weight.
/// Equal weights resolve to the lower operation index.
fn best_op(weights: &[f64; N_OPS]) -> (Op, f64) {
    let mut best = (Op::ALL[0], weights[0]);
    for op in &Op::ALL[1..] {
        if *op != Op::Zero && weights[op.index()] > best.1 {
            best = (*op, weights[op.index()]);
        }
    }
    best
}

/// Keep, for every node, the two incoming edges whose best non-`zero`
/// operation has the largest weight. Ties go to the lower edge index.
pub fn discretize(alpha: &AlphaMatrix, cell: &CellSpec) -> Result<Genotype> {
    cell.validate()?;
    if alpha.n_edges() != cell.n_edges() {
        return Err(Error::DimensionMismatch {
            expected: (cell.n_edges(), N_OPS),
            found: (alpha.n_edges(), N_OPS),
        });
    }
    let weights = relax(alpha);
    let mut nodes = Vec::with_capacity(cell.n_nodes);
    for k in 0..cell.n_nodes {
        let off = cell.edge_offset(k);
        let mut cands: Vec<(usize, Op, f64)> = (0..cell.in_degree(k))
            .map(|p| {
                let (op, w) = best_op(&weights[off + p]);
                (p, op, w)
            })
            .collect();
        // Stable sort keeps lower predecessors first among equal weights.
        cands.sort_by(|a, b| b.2.total_cmp(&a.2));
        let mut keep = [(cands[0].0, cands[0].1), (cands[1].0, cands[1].1)];
        keep.sort_by_key(|e| e.0);
        nodes.push(keep);
    }
    Genotype::new(cell.kind, cell.n_inputs, nodes)
}

fn binomial2(n: u128) -> u128 {
    n * n.saturating_sub(1) / 2
}

/// Number of distinct genotypes for `cell` with `n_candidates` operations
/// (one of which is `zero` and never selected).
pub fn search_space_size(cell: &CellSpec, n_candidates: usize) -> Result<u128> {
    cell.validate()?;
    if n_candidates < 2 {
        return Err(Error::InvalidConfig(
            "need at least one candidate besides zero".into(),
        ));
    }
    let ops = (n_candidates - 1) as u128;
    let overflow = || Error::InvalidConfig("search space size overflows u128".into());
    let mut total: u128 = 1;
    for k in 0..cell.n_nodes {
        let per_node = binomial2(cell.in_degree(k) as u128)
            .checked_mul(ops * ops)
            .ok_or_else(overflow)?;
        total = total.checked_mul(per_node).ok_or_else(overflow)?;
    }
    Ok(total)
}
