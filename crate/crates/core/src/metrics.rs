//! Image-quality metrics: SSIM, pixel losses and a layered feature loss.
//!
//! Images are [`Field`]s. SSIM is averaged over valid window positions only;
//! the feature extractor pads by replicating edges.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;

/// SSIM averaging window. Both kinds are separable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SsimWindow {
    Uniform { size: usize },
    Gaussian { size: usize, sigma: f64 },
}

impl SsimWindow {
    pub fn size(&self) -> usize {
        match *self {
            SsimWindow::Uniform { size } | SsimWindow::Gaussian { size, .. } => size,
        }
    }

    /// Normalized 1D taps; the 2D window is their outer product.
    pub fn taps(&self) -> Vec<f64> {
        match *self {
            SsimWindow::Uniform { size } => vec![1.0 / size as f64; size],
            SsimWindow::Gaussian { size, sigma } => {
                let c = (size / 2) as f64;
                let mut w: Vec<f64> = (0..size)
                    .map(|k| {
                        let d = k as f64 - c;
                        libm::exp(-d * d / (2.0 * sigma * sigma))
                    })
                    .collect();
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|v| *v /= s);
                w
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub k1: f64,
    pub k2: f64,
    /// Fixed dynamic range `L`; `None` uses `max(a, b) - min(a, b)` per call
    /// (falling back to 1 when both images are the same constant).
    pub dynamic_range: Option<f64>,
    pub window: SsimWindow,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            k1: 0.01,
            k2: 0.03,
            dynamic_range: None,
            window: SsimWindow::Gaussian {
                size: 11,
                sigma: 1.5,
            },
        }
    }
}

impl SsimConfig {
    pub fn uniform(size: usize) -> Self {
        Self {
            window: SsimWindow::Uniform { size },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.k1) || !pos(self.k2) {
            return Err(Error::InvalidConfig(
                "SSIM k1 and k2 must be positive".into(),
            ));
        }
        if let Some(l) = self.dynamic_range {
            if !pos(l) {
                return Err(Error::InvalidConfig(
                    "SSIM dynamic range must be positive".into(),
                ));
            }
        }
        let size = self.window.size();
        if size < 3 || size.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "SSIM window size must be odd and at least 3, got {size}"
            )));
        }
        if let SsimWindow::Gaussian { sigma, .. } = self.window {
            if !pos(sigma) {
                return Err(Error::InvalidConfig(
                    "SSIM window sigma must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

fn check_pair(a: &Field, b: &Field) -> Result<()> {
    b.ensure_shape(a.shape())?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::NonFinite("image"));
    }
    Ok(())
}

/// Valid-mode separable weighted sum: rows then columns.
fn window_sums(x: &Field, taps: &[f64]) -> Field {
    let n = taps.len();
    let (rows, cols) = x.shape();
    let (vr, vc) = (rows + 1 - n, cols + 1 - n);
    let horiz = Field::from_fn(rows, vc, |j, i| {
        taps.iter()
            .zip(&x.row(j)[i..i + n])
            .map(|(w, v)| w * v)
            .sum()
    });
    Field::from_fn(vr, vc, |j, i| {
        taps.iter()
            .enumerate()
            .map(|(k, w)| w * horiz[(j + k, i)])
            .sum()
    })
}

/// Mean structural similarity over all valid window positions.
pub fn ssim(a: &Field, b: &Field, cfg: &SsimConfig) -> Result<f64> {
    cfg.validate()?;
    check_pair(a, b)?;
    let n = cfg.window.size();
    let (rows, cols) = a.shape();
    if rows < n || cols < n {
        return Err(Error::TooSmall(format!(
            "{rows}x{cols} image is smaller than the {n}x{n} SSIM window"
        )));
    }
    let l = match cfg.dynamic_range {
        Some(l) => l,
        None => {
            let (a_lo, a_hi) = a.min_max();
            let (b_lo, b_hi) = b.min_max();
            let range = a_hi.max(b_hi) - a_lo.min(b_lo);
            if range > 0.0 {
                range
            } else {
                1.0
            }
        }
    };
    let c1 = (cfg.k1 * l) * (cfg.k1 * l);
    let c2 = (cfg.k2 * l) * (cfg.k2 * l);

    let taps = cfg.window.taps();
    let mu_a = window_sums(a, &taps);
    let mu_b = window_sums(b, &taps);
    let aa = window_sums(&a.map(|v| v * v), &taps);
    let bb = window_sums(&b.map(|v| v * v), &taps);
    let ab = window_sums(
        &Field::from_fn(rows, cols, |j, i| a[(j, i)] * b[(j, i)]),
        &taps,
    );

    let count = mu_a.as_slice().len();
    let mut total = 0.0;
    for k in 0..count {
        let (ma, mb) = (mu_a.as_slice()[k], mu_b.as_slice()[k]);
        let va = aa.as_slice()[k] - ma * ma;
        let vb = bb.as_slice()[k] - mb * mb;
        let cov = ab.as_slice()[k] - ma * mb;
        let num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
        let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
        total += num / den;
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelNorm {
    /// Mean absolute difference.
    L1,
    /// Root-mean-square difference.
    L2,
}

pub fn pixel_loss(a: &Field, b: &Field, norm: PixelNorm) -> Result<f64> {
    b.ensure_shape(a.shape())?;
    let n = a.as_slice().len() as f64;
    let diffs = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x - y);
    Ok(match norm {
        PixelNorm::L1 => diffs.map(f64::abs).sum::<f64>() / n,
        PixelNorm::L2 => libm::sqrt(diffs.map(|d| d * d).sum::<f64>() / n),
    })
}

/// Odd-sized correlation kernel, row-major, centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self> {
        if rows.is_multiple_of(2) || cols.is_multiple_of(2) || taps.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "kernel must be odd-sized with rows*cols taps, got {rows}x{cols} with {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("kernel"));
        }
        Ok(Self { rows, cols, taps })
    }

    pub fn identity() -> Self {
        Self {
            rows: 1,
            cols: 1,
            taps: vec![1.0],
        }
    }

    /// Central difference along columns, `(x[i+1] - x[i-1]) / 2`.
    pub fn gradient_x() -> Self {
        Self {
            rows: 1,
            cols: 3,
            taps: vec![-0.5, 0.0, 0.5],
        }
    }

    /// Central difference along rows.
    pub fn gradient_z() -> Self {
        Self {
            rows: 3,
            cols: 1,
            taps: vec![-0.5, 0.0, 0.5],
        }
    }

    /// 5x5 binomial blur, outer product of `[1, 4, 6, 4, 1] / 16`.
    pub fn binomial5() -> Self {
        let b = [1.0, 4.0, 6.0, 4.0, 1.0];
        let taps = b
            .iter()
            .flat_map(|p| b.iter().map(move |q| p * q / 256.0))
            .collect();
        Self {
            rows: 5,
            cols: 5,
            taps,
        }
    }

    pub fn extent(&self) -> usize {
        self.rows.max(self.cols)
    }

    /// Correlation with replicated edges; output has the input's shape.
    pub fn apply(&self, x: &Field) -> Field {
        let (rows, cols) = x.shape();
        let (hr, hc) = ((self.rows / 2) as isize, (self.cols / 2) as isize);
        let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
        Field::from_fn(rows, cols, |j, i| {
            let mut acc = 0.0;
            for a in 0..self.rows {
                let jj = clamp(j as isize + a as isize - hr, rows);
                for b in 0..self.cols {
                    let ii = clamp(i as isize + b as isize - hc, cols);
                    acc += self.taps[a * self.cols + b] * x[(jj, ii)];
                }
            }
            acc
        })
    }
}

/// One extractor stage: optional smoothing, then decimation, then a bank of
/// kernels applied to every incoming channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub smoothing: Option<Kernel>,
    pub downsample: usize,
    pub kernels: Vec<Kernel>,
}

impl Stage {
    fn min_input(&self) -> usize {
        let k = self.kernels.iter().map(Kernel::extent).max().unwrap_or(1);
        let s = self.smoothing.as_ref().map_or(1, Kernel::extent);
        s.max(k * self.downsample)
    }

    fn apply(&self, channels: &[Field]) -> Vec<Field> {
        let mut out = Vec::with_capacity(channels.len() * self.kernels.len());
        for ch in channels {
            let smoothed = match &self.smoothing {
                Some(k) => k.apply(ch),
                None => ch.clone(),
            };
            let s = self.downsample;
            let reduced = if s == 1 {
                smoothed
            } else {
                Field::from_fn(smoothed.rows() / s, smoothed.cols() / s, |j, i| {
                    smoothed[(j * s, i * s)]
                })
            };
            out.extend(self.kernels.iter().map(|k| k.apply(&reduced)));
        }
        out
    }
}

/// Fixed, deterministic multi-scale filter bank standing in for a pretrained
/// network's feature layers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    stages: Vec<Stage>,
}

impl Default for FeatureExtractor {
    /// Identity and gradients at full, half and quarter scale, with binomial
    /// smoothing before each decimation.
    fn default() -> Self {
        let bank = || {
            vec![
                Kernel::identity(),
                Kernel::gradient_x(),
                Kernel::gradient_z(),
            ]
        };
        let reduce = || Stage {
            smoothing: Some(Kernel::binomial5()),
            downsample: 2,
            kernels: bank(),
        };
        Self {
            stages: vec![
                Stage {
                    smoothing: None,
                    downsample: 1,
                    kernels: bank(),
                },
                reduce(),
                reduce(),
            ],
        }
    }
}

impl FeatureExtractor {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidConfig(
                "feature extractor needs at least one stage".into(),
            ));
        }
        for (l, st) in stages.iter().enumerate() {
            if st.kernels.is_empty() || st.downsample == 0 {
                return Err(Error::InvalidConfig(format!(
                    "stage {l} needs at least one kernel and a positive downsampling factor"
                )));
            }
        }
        Ok(Self { stages })
    }

    /// A single stage holding only the identity kernel.
    pub fn identity() -> Self {
        Self {
            stages: vec![Stage {
                smoothing: None,
                downsample: 1,
                kernels: vec![Kernel::identity()],
            }],
        }
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Cumulative outputs after each stage.
    pub fn features(&self, image: &Field) -> Result<Vec<Vec<Field>>> {
        let mut shape = image.shape();
        for (l, st) in self.stages.iter().enumerate() {
            let need = st.min_input();
            if shape.0 < need || shape.1 < need {
                return Err(Error::TooSmall(format!(
                    "stage {l} needs at least {need}x{need} input, got {}x{}",
                    shape.0, shape.1
                )));
            }
            shape = (shape.0 / st.downsample, shape.1 / st.downsample);
        }
        let mut current = vec![image.clone()];
        let mut out = Vec::with_capacity(self.stages.len());
        for st in &self.stages {
            current = st.apply(&current);
            out.push(current.clone());
        }
        Ok(out)
    }
}

/// Sum over stages of the L2 norm of the feature difference.
pub fn feature_loss(a: &Field, b: &Field, ext: &FeatureExtractor) -> Result<f64> {
    b.ensure_shape(a.shape())?;
    let fa = ext.features(a)?;
    let fb = ext.features(b)?;
    Ok(fa
        .iter()
        .zip(&fb)
        .map(|(sa, sb)| {
            let sq: f64 = sa
                .iter()
                .zip(sb)
                .flat_map(|(x, y)| {
                    x.as_slice()
                        .iter()
                        .zip(y.as_slice())
                        .map(|(p, q)| (p - q) * (p - q))
                })
                .sum();
            libm::sqrt(sq)
        })
        .sum())
}

/// `pixel_loss + lambda * feature_loss`.
pub fn combined_loss(
    a: &Field,
    b: &Field,
    lambda: f64,
    ext: &FeatureExtractor,
    norm: PixelNorm,
) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::InvalidConfig("loss weight must be finite".into()));
    }
    Ok(pixel_loss(a, b, norm)? + lambda * feature_loss(a, b, ext)?)
}

#[cfg(test)]
mod tests;
