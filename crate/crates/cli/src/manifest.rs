//! `manifest.tsv`: one row per emitted file, ordered by model index.

use std::fmt::Write as _;
use std::path::Path;

use crate::checksum::{fnv1a64, hex};
use crate::error::{CliError, Result};

pub const FILE_NAME: &str = "manifest.tsv";
pub const HEADER: &str = "model\tkind\tpath\tseed\tfnv1a64\tbytes";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub model: usize,
    /// `velocity`, `gather` or `rtm`.
    pub kind: String,
    /// Relative to the dataset directory, `/`-separated.
    pub path: String,
    pub seed: u64,
    pub checksum: u64,
    pub bytes: u64,
}

impl Entry {
    pub fn for_bytes(model: usize, kind: &str, path: String, seed: u64, data: &[u8]) -> Self {
        Self {
            model,
            kind: kind.to_string(),
            path,
            seed,
            checksum: fnv1a64(data),
            bytes: data.len() as u64,
        }
    }
}

pub fn to_text(entries: &[Entry]) -> String {
    let mut out = format!("{HEADER}\n");
    for e in entries {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.model,
            e.kind,
            e.path,
            e.seed,
            hex(e.checksum),
            e.bytes
        )
        .unwrap();
    }
    out
}

pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(CliError::Config("manifest header missing".into()));
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let bad = || CliError::Config(format!("manifest line {}: `{line}`", n + 2));
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(bad());
            }
            Ok(Entry {
                model: f[0].parse().map_err(|_| bad())?,
                kind: f[1].to_string(),
                path: f[2].to_string(),
                seed: f[3].parse().map_err(|_| bad())?,
                checksum: u64::from_str_radix(f[4], 16).map_err(|_| bad())?,
                bytes: f[5].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn read(dir: &Path) -> Result<Vec<Entry>> {
    let path = dir.join(FILE_NAME);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    parse(&text)
}

/// Entries whose file is missing or whose size or checksum disagrees.
pub fn verify(dir: &Path, entries: &[Entry]) -> Vec<String> {
    entries
        .iter()
        .filter(|e| match std::fs::read(dir.join(&e.path)) {
            Ok(data) => data.len() as u64 != e.bytes || fnv1a64(&data) != e.checksum,
            Err(_) => true,
        })
        .map(|e| e.path.clone())
        .collect()
}
