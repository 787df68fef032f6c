use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use super::{CellKind, Op};
use crate::error::{Error, Result};

/// The two retained `(predecessor, op)` edges of one node, sorted by predecessor.
pub type NodeEdges = [(usize, Op); 2];

/// Discrete cell architecture.
///
/// Text form, one item per line:
///
/// ```text
/// kind: encoder
/// inputs: 2
/// node 0: (0, conv3x3) (1, max_pool3x3)
/// node 1: (1, identity) (2, dilated_conv3x3)
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Genotype {
    kind: CellKind,
    n_inputs: usize,
    nodes: Vec<NodeEdges>,
}

impl Genotype {
    /// Validates and canonicalizes (edges sorted by predecessor).
    pub fn new(kind: CellKind, n_inputs: usize, nodes: Vec<NodeEdges>) -> Result<Self> {
        if n_inputs < 2 {
            return Err(Error::InvalidConfig(
                "a genotype needs at least two inputs".into(),
            ));
        }
        if nodes.is_empty() {
            return Err(Error::InvalidConfig(
                "a genotype needs at least one node".into(),
            ));
        }
        let mut canon = Vec::with_capacity(nodes.len());
        for (k, mut edges) in nodes.into_iter().enumerate() {
            edges.sort_by_key(|e| e.0);
            if edges[0].0 == edges[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "node {k} uses predecessor {} twice",
                    edges[0].0
                )));
            }
            for (p, op) in edges {
                if p >= n_inputs + k {
                    return Err(Error::InvalidConfig(format!(
                        "node {k} cannot read from predecessor {p}"
                    )));
                }
                if op == Op::Zero {
                    return Err(Error::InvalidConfig(format!(
                        "node {k} retains a zero edge"
                    )));
                }
            }
            canon.push(edges);
        }
        Ok(Self {
            kind,
            n_inputs,
            nodes: canon,
        })
    }

    pub fn kind(&self) -> CellKind {
        self.kind
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeEdges] {
        &self.nodes
    }

    pub fn ops(&self) -> impl Iterator<Item = Op> + '_ {
        self.nodes.iter().flat_map(|n| n.iter().map(|e| e.1))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{self}");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let mut header = |key: &str| -> Result<&str> {
            let (no, line) = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{key}:` line")))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(':'))
                .map(str::trim)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "line {}: expected `{key}:`, found `{line}`",
                        no + 1
                    ))
                })
        };
        let kind_tok = header("kind")?;
        let kind = CellKind::from_name(kind_tok)
            .ok_or_else(|| Error::Parse(format!("unknown cell kind `{kind_tok}`")))?;
        let inputs_tok = header("inputs")?;
        let n_inputs: usize = inputs_tok
            .parse()
            .map_err(|_| Error::Parse(format!("invalid input count `{inputs_tok}`")))?;

        let mut nodes = Vec::new();
        for (no, line) in lines {
            let bad = |what: &str| Error::Parse(format!("line {}: {what} in `{line}`", no + 1));
            let rest = line
                .strip_prefix("node")
                .ok_or_else(|| bad("expected `node k:`"))?;
            let (idx, edges) = rest.split_once(':').ok_or_else(|| bad("missing `:`"))?;
            let idx = idx.trim();
            if idx.parse::<usize>().ok() != Some(nodes.len()) {
                return Err(bad(&format!("node index `{idx}` out of sequence")));
            }
            let mut parsed = Vec::with_capacity(2);
            let mut rest = edges.trim();
            while !rest.is_empty() {
                let inner = rest.strip_prefix('(').ok_or_else(|| bad("expected `(`"))?;
                let (body, tail) = inner.split_once(')').ok_or_else(|| bad("unclosed `(`"))?;
                let (pred, op) = body
                    .split_once(',')
                    .ok_or_else(|| bad("expected `(pred, op)`"))?;
                let (pred, op) = (pred.trim(), op.trim());
                let pred: usize = pred
                    .parse()
                    .map_err(|_| bad(&format!("invalid predecessor `{pred}`")))?;
                let op =
                    Op::from_name(op).ok_or_else(|| bad(&format!("unknown operation `{op}`")))?;
                parsed.push((pred, op));
                rest = tail.trim_start();
            }
            let edges: NodeEdges = parsed
                .try_into()
                .map_err(|v: Vec<_>| bad(&format!("expected 2 edges, found {}", v.len())))?;
            nodes.push(edges);
        }
        Self::new(kind, n_inputs, nodes)
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind: {}", self.kind.name())?;
        writeln!(f, "inputs: {}", self.n_inputs)?;
        for (k, [a, b]) in self.nodes.iter().enumerate() {
            writeln!(f, "node {k}: ({}, {}) ({}, {})", a.0, a.1, b.0, b.1)?;
        }
        Ok(())
    }
}
