//! 2D constant-density acoustic modeling with explicit finite differences.
//!
//! The scheme is second order in time and second or fourth order in space:
//!
//! ```text
//! u[n+1] = G * (2 u[n] - G u[n-1] + (v dt)^2 lap(u[n]) + dt^2 / (dx dz) * s[n] * delta_src)
//! ```
//!
//! where `G` is a Cerjan-style exponential taper in the absorbing band. The
//! physical model is padded by the sponge width on every absorbing side (edge
//! velocities replicated), so sources and receivers never sit inside the
//! sponge. Outside the computational grid the field is zero.
//!
//! Time convention: step `n` (0-based) injects `s(n dt)` and produces the
//! state `u[n+1]`; gather row `n` samples that state.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::velmodel::{Grid2D, Point, VelocityModel};

/// Steps between divergence checks.
pub const GUARD_INTERVAL: usize = 100;
/// A run is declared divergent once `max |u|` exceeds this multiple of the
/// per-step source injection peak `dt^2 |A| / (dx dz)`.
pub const DIVERGENCE_FACTOR: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RickerSource {
    /// Dominant frequency (Hz).
    pub f0: f64,
    /// Peak delay (s).
    pub t0: f64,
    pub amplitude: f64,
}

impl RickerSource {
    /// Wavelet peaking at `t0 = 1.5 / f0`.
    pub fn new(f0: f64, amplitude: f64) -> Result<Self> {
        let s = Self {
            f0,
            t0: 1.5 / f0,
            amplitude,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0.is_finite() && self.f0 > 0.0) {
            return Err(Error::InvalidConfig("Ricker f0 must be positive".into()));
        }
        // Tolerate one ulp of slack so t0 = 1/f0 computed either way passes.
        if !(self.t0.is_finite() && self.t0 * self.f0 >= 1.0 - 1e-12) {
            return Err(Error::InvalidConfig(
                "Ricker t0 must be at least 1/f0".into(),
            ));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::NonFinite("Ricker amplitude"));
        }
        Ok(())
    }
}

/// `A (1 - 2 pi^2 f0^2 (t - t0)^2) exp(-pi^2 f0^2 (t - t0)^2)`.
pub fn ricker(src: &RickerSource, t: f64) -> f64 {
    let a = PI * src.f0 * (t - src.t0);
    let a2 = a * a;
    src.amplitude * (1.0 - 2.0 * a2) * libm::exp(-a2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpaceOrder {
    #[default]
    Second,
    Fourth,
}

impl SpaceOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(Self::Second),
            4 => Ok(Self::Fourth),
            _ => Err(Error::InvalidConfig(format!(
                "spatial order must be 2 or 4, got {order}"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Self::Second => 2,
            Self::Fourth => 4,
        }
    }

    pub fn radius(self) -> usize {
        self.order() / 2
    }

    /// Second-derivative coefficients `[c0, c1, ..]` for offsets `0, +-1, ..`.
    pub fn coefficients(self) -> &'static [f64] {
        match self {
            Self::Second => &[-2.0, 1.0],
            Self::Fourth => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        }
    }

    /// `sqrt(4 / S)` with `S` the absolute coefficient sum (4 and 16/3). `S` is
    /// the magnitude of the stencil symbol at the Nyquist wavenumber.
    pub fn stability_factor(self) -> f64 {
        let s: f64 = self.coefficients()[0].abs()
            + 2.0
                * self.coefficients()[1..]
                    .iter()
                    .map(|c| c.abs())
                    .sum::<f64>();
        libm::sqrt(4.0 / s)
    }
}

/// Largest stable time step: `stability_factor / sqrt(2) * min(dx, dz) / v_max`.
pub fn cfl_max_dt(model: &VelocityModel, order: SpaceOrder) -> f64 {
    let g = model.grid();
    order.stability_factor() / core::f64::consts::SQRT_2 * g.dx.min(g.dz) / model.v_max()
}

/// Exponential absorbing band.
///
/// The factor is applied once per time step, so absorption depends on `dt`.
/// The default strength keeps boundary-reflected energy near 2% of the direct
/// arrival for 10 Hz waves at `dt` = 1 ms; steeper tapers reflect more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpongeBoundary {
    /// Band width in cells.
    pub width: usize,
    /// Per-cell factor is `exp(-(strength * d)^2)`, `d` the depth into the band in cells.
    pub strength: f64,
    /// Pressure-release top instead of an absorbing band.
    pub free_surface: bool,
}

impl Default for SpongeBoundary {
    fn default() -> Self {
        Self {
            width: 30,
            strength: 0.006,
            free_surface: false,
        }
    }
}

impl SpongeBoundary {
    pub fn none() -> Self {
        Self {
            width: 0,
            strength: 0.0,
            free_surface: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.strength) {
            return Err(Error::InvalidConfig(
                "sponge strength must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn factor(&self, depth_cells: usize) -> f64 {
        let d = self.strength * depth_cells as f64;
        libm::exp(-d * d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub source: Point,
    pub receiver_xs: Vec<f64>,
    pub receiver_z: f64,
    pub dt: f64,
    pub nt: usize,
}

impl Acquisition {
    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        if self.nt < 2 {
            return Err(Error::InvalidConfig("nt must be at least 2".into()));
        }
        if self.receiver_xs.is_empty() {
            return Err(Error::InvalidConfig("no receivers".into()));
        }
        let inside = |p: Point| {
            p.x >= 2.0 * grid.dx
                && p.x <= grid.width() - 2.0 * grid.dx
                && p.z >= 2.0 * grid.dz
                && p.z <= grid.depth() - 2.0 * grid.dz
        };
        if !inside(self.source) {
            return Err(Error::InvalidConfig(format!(
                "source ({}, {}) is not at least 2 cells inside the grid",
                self.source.x, self.source.z
            )));
        }
        for &x in &self.receiver_xs {
            if !inside(Point::new(x, self.receiver_z)) {
                return Err(Error::InvalidConfig(format!(
                    "receiver ({x}, {}) is not at least 2 cells inside the grid",
                    self.receiver_z
                )));
            }
        }
        Ok(())
    }

    pub fn n_receivers(&self) -> usize {
        self.receiver_xs.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotGather {
    /// `nt x n_receivers`.
    pub data: Field,
    pub dt: f64,
    pub receiver_xs: Vec<f64>,
}

impl ShotGather {
    pub fn new(data: Field, dt: f64, receiver_xs: Vec<f64>) -> Result<Self> {
        if data.cols() != receiver_xs.len() {
            return Err(Error::DimensionMismatch {
                expected: (data.rows(), receiver_xs.len()),
                found: data.shape(),
            });
        }
        if !data.is_finite() {
            return Err(Error::NonFinite("shot gather"));
        }
        Ok(Self {
            data,
            dt,
            receiver_xs,
        })
    }

    pub fn nt(&self) -> usize {
        self.data.rows()
    }

    pub fn trace(&self, r: usize) -> Vec<f64> {
        (0..self.data.rows()).map(|t| self.data[(t, r)]).collect()
    }
}

/// Snapshots of the physical (unpadded) wavefield, stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldHistory {
    pub nz: usize,
    pub nx: usize,
    pub save_stride: usize,
    snapshots: Vec<f32>,
}

impl WavefieldHistory {
    pub fn new(nz: usize, nx: usize, save_stride: usize) -> Self {
        Self {
            nz,
            nx,
            save_stride,
            snapshots: Vec::new(),
        }
    }

    pub fn n_saved(&self) -> usize {
        self.snapshots.len() / (self.nz * self.nx)
    }

    /// Snapshot `k` holds the state after step `k * save_stride`.
    pub fn snapshot(&self, k: usize) -> &[f32] {
        let n = self.nz * self.nx;
        &self.snapshots[k * n..(k + 1) * n]
    }

    fn push(&mut self, frame: impl Iterator<Item = f64>) {
        self.snapshots.extend(frame.map(|v| v as f32));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelingOptions {
    pub order: SpaceOrder,
    /// Save every `k`-th state when set.
    pub save_stride: Option<usize>,
}

impl Default for ModelingOptions {
    fn default() -> Self {
        Self {
            order: SpaceOrder::Second,
            save_stride: None,
        }
    }
}

/// Which operator a propagation applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `u[n+1] = G (2 u[n] - G u[n-1] + v^2 dt^2 lap(u[n]) + f)`.
    Forward,
    /// Transposed spatial operator, `lap(v^2 dt^2 w)`: time-reversed runs in
    /// this mode are the exact discrete adjoint of `Forward`.
    Adjoint,
}

/// Bilinear interpolation weights for one receiver on the computational grid.
#[derive(Debug, Clone, Copy)]
pub struct Stencil4 {
    pub idx: [usize; 4],
    pub w: [f64; 4],
}

/// Time stepper on a (possibly padded) computational grid.
///
/// Fields passed to the stepping methods use the halo layout returned by
/// [`Propagator::new_field`]: the computational grid surrounded by `radius`
/// rows and columns of zeros that are never written.
#[derive(Debug, Clone)]
pub struct Propagator {
    order: SpaceOrder,
    /// Computational grid size.
    nz: usize,
    nx: usize,
    /// Halo width (stencil radius).
    halo: usize,
    stride: usize,
    pad_top: usize,
    pad_left: usize,
    /// Physical model size.
    model_nz: usize,
    model_nx: usize,
    dx: f64,
    dz: f64,
    dt: f64,
    /// `(v dt)^2` per cell, halo layout (zero in the halo).
    vdt2: Vec<f64>,
    /// Taper per cell, halo layout. `None` when no cell is tapered.
    taper: Option<Vec<f64>>,
    scratch: Vec<f64>,
}

impl Propagator {
    /// Build a propagator over `model` padded by the sponge width on every
    /// absorbing side. No stability check is made here.
    pub fn new(
        model: &VelocityModel,
        dt: f64,
        sponge: &SpongeBoundary,
        order: SpaceOrder,
    ) -> Result<Self> {
        sponge.validate()?;
        let w = sponge.width;
        let pad_top = if sponge.free_surface { 0 } else { w };
        Self::build(model, dt, sponge, order, pad_top, w)
    }

    /// Propagator on exactly the model grid, with the sponge band (if any)
    /// inside the model's outer cells.
    pub fn unpadded(
        model: &VelocityModel,
        dt: f64,
        sponge: &SpongeBoundary,
        order: SpaceOrder,
    ) -> Result<Self> {
        sponge.validate()?;
        Self::build(model, dt, sponge, order, 0, 0)
    }

    fn build(
        model: &VelocityModel,
        dt: f64,
        sponge: &SpongeBoundary,
        order: SpaceOrder,
        pad_top: usize,
        pad: usize,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig("dt must be positive".into()));
        }
        let g = *model.grid();
        let (model_nz, model_nx) = g.shape();
        let nz = model_nz + pad_top + pad;
        let nx = model_nx + 2 * pad;
        let halo = order.radius();
        let stride = nx + 2 * halo;
        let total = (nz + 2 * halo) * stride;

        let mut vdt2 = vec![0.0; total];
        let vp = model.vp();
        for j in 0..nz {
            let mj = j.saturating_sub(pad_top).min(model_nz - 1);
            for i in 0..nx {
                let mi = i.saturating_sub(pad).min(model_nx - 1);
                let v = vp[(mj, mi)] * dt;
                vdt2[(j + halo) * stride + i + halo] = v * v;
            }
        }

        let w = sponge.width;
        let taper = (w > 0 && sponge.strength > 0.0).then(|| {
            let mut t = vec![1.0; total];
            for j in 0..nz {
                for i in 0..nx {
                    let mut d = 0usize;
                    d = d.max(w.saturating_sub(i));
                    d = d.max(w.saturating_sub(nx - 1 - i));
                    d = d.max(w.saturating_sub(nz - 1 - j));
                    if !sponge.free_surface {
                        d = d.max(w.saturating_sub(j));
                    }
                    t[(j + halo) * stride + i + halo] = sponge.factor(d);
                }
            }
            t
        });

        Ok(Self {
            order,
            nz,
            nx,
            halo,
            stride,
            pad_top,
            pad_left: pad,
            model_nz,
            model_nx,
            dx: g.dx,
            dz: g.dz,
            dt,
            vdt2,
            taper,
            scratch: vec![0.0; total],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Computational grid shape `(rows, cols)` without the halo.
    pub fn shape(&self) -> (usize, usize) {
        (self.nz, self.nx)
    }

    pub fn new_field(&self) -> Vec<f64> {
        vec![0.0; (self.nz + 2 * self.halo) * self.stride]
    }

    /// Halo-layout index of model cell `(j, i)`.
    #[inline]
    pub fn model_index(&self, j: usize, i: usize) -> usize {
        (j + self.pad_top + self.halo) * self.stride + i + self.pad_left + self.halo
    }

    /// Halo-layout index of computational cell `(j, i)`.
    #[inline]
    pub fn grid_index(&self, j: usize, i: usize) -> usize {
        (j + self.halo) * self.stride + i + self.halo
    }

    /// Index of the model cell containing point `p` (meters).
    pub fn nearest_cell(&self, p: Point) -> usize {
        let i = ((p.x / self.dx) as usize).min(self.model_nx - 1);
        let j = ((p.z / self.dz) as usize).min(self.model_nz - 1);
        self.model_index(j, i)
    }

    /// Bilinear weights for a point in model coordinates; cell centers sit at `(k + 1/2) h`.
    pub fn bilinear(&self, p: Point) -> Stencil4 {
        let fx = p.x / self.dx - 0.5;
        let fz = p.z / self.dz - 0.5;
        let i0 = libm::floor(fx).clamp(0.0, (self.model_nx - 2) as f64);
        let j0 = libm::floor(fz).clamp(0.0, (self.model_nz - 2) as f64);
        let (wx, wz) = ((fx - i0).clamp(0.0, 1.0), (fz - j0).clamp(0.0, 1.0));
        let (i0, j0) = (i0 as usize, j0 as usize);
        Stencil4 {
            idx: [
                self.model_index(j0, i0),
                self.model_index(j0, i0 + 1),
                self.model_index(j0 + 1, i0),
                self.model_index(j0 + 1, i0 + 1),
            ],
            w: [
                (1.0 - wx) * (1.0 - wz),
                wx * (1.0 - wz),
                (1.0 - wx) * wz,
                wx * wz,
            ],
        }
    }

    /// Source injection scale `dt^2 / (dx dz)`.
    pub fn injection_scale(&self) -> f64 {
        self.dt * self.dt / (self.dx * self.dz)
    }

    /// Advance one step: `next = G (2 curr - G prev + A curr + inject)`, where
    /// `inject` adds its contribution to `next` before tapering.
    ///
    /// Damping both time levels makes the field decay as `G^n` inside the
    /// band; tapering only `next` would act as a mass term and reflect.
    pub fn step(
        &mut self,
        mode: Mode,
        prev: &[f64],
        curr: &[f64],
        next: &mut [f64],
        inject: impl FnOnce(&mut [f64]),
    ) {
        let coef = self.order.coefficients();
        let r = self.halo;
        let s = self.stride;
        let (idx2, idz2) = (1.0 / (self.dx * self.dx), 1.0 / (self.dz * self.dz));
        let c0 = coef[0] * (idx2 + idz2);

        // Adjoint: the Laplacian acts on v^2 dt^2 * w.
        let src: &[f64] = match mode {
            Mode::Forward => curr,
            Mode::Adjoint => {
                for ((o, c), v) in self.scratch.iter_mut().zip(curr).zip(&self.vdt2) {
                    *o = c * v;
                }
                &self.scratch
            }
        };

        for j in 0..self.nz {
            let row = (j + r) * s + r;
            for i in 0..self.nx {
                let k = row + i;
                let mut lap = c0 * src[k];
                for (o, c) in coef.iter().enumerate().skip(1) {
                    lap += c
                        * ((src[k - o] + src[k + o]) * idx2
                            + (src[k - o * s] + src[k + o * s]) * idz2);
                }
                let a = match mode {
                    Mode::Forward => self.vdt2[k] * lap,
                    Mode::Adjoint => lap,
                };
                let g = self.taper.as_ref().map_or(1.0, |t| t[k]);
                next[k] = 2.0 * curr[k] - g * prev[k] + a;
            }
        }
        inject(next);
        if let Some(t) = &self.taper {
            for (n, g) in next.iter_mut().zip(t) {
                *n *= g;
            }
        }
    }

    /// Run `nt` steps from rest.
    ///
    /// `inject(n, next)` adds the sources of step `n`; `observe(n, state)`
    /// sees the state after step `n`. Every [`GUARD_INTERVAL`] steps (and on
    /// the last step) the run aborts with [`Error::Divergence`] if any value
    /// is non-finite or exceeds `limit` in magnitude.
    pub fn run(
        &mut self,
        mode: Mode,
        nt: usize,
        limit: f64,
        mut inject: impl FnMut(usize, &mut [f64]),
        mut observe: impl FnMut(usize, &[f64]),
    ) -> Result<()> {
        let mut prev = self.new_field();
        let mut curr = self.new_field();
        let mut next = self.new_field();
        for n in 0..nt {
            self.step(mode, &prev, &curr, &mut next, |f| inject(n, f));
            observe(n, &next);
            if (n + 1) % GUARD_INTERVAL == 0 || n + 1 == nt {
                let m = max_abs_or_nan(&next);
                if !m.is_finite() || m > limit {
                    return Err(Error::Divergence {
                        step: n + 1,
                        max_abs: m,
                    });
                }
            }
            core::mem::swap(&mut prev, &mut curr);
            core::mem::swap(&mut curr, &mut next);
        }
        Ok(())
    }

    /// Copy the physical region of a halo-layout field.
    pub fn crop(&self, u: &[f64]) -> Field {
        Field::from_fn(self.model_nz, self.model_nx, |j, i| {
            u[self.model_index(j, i)]
        })
    }

    pub fn crop_layout(&self) -> CropLayout {
        CropLayout {
            nz: self.model_nz,
            nx: self.model_nx,
            origin: self.model_index(0, 0),
            stride: self.stride,
        }
    }
}

/// Location of the physical model inside a halo-layout field.
#[derive(Debug, Clone, Copy)]
pub struct CropLayout {
    pub nz: usize,
    pub nx: usize,
    origin: usize,
    stride: usize,
}

impl CropLayout {
    /// Physical rows of `u`, top to bottom.
    pub fn rows<'a>(&self, u: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        let CropLayout {
            nz,
            nx,
            origin,
            stride,
        } = *self;
        (0..nz).map(move |j| &u[origin + j * stride..origin + j * stride + nx])
    }
}

fn max_abs_or_nan(u: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for v in u {
        if v.is_nan() {
            return f64::NAN;
        }
        m = m.max(v.abs());
    }
    m
}

/// One explicit update on the unpadded model grid; the sponge band, if any,
/// occupies the model's outer cells. `src_cell` is `(row, col)`.
#[allow(clippy::too_many_arguments)]
pub fn step(
    u_prev: &Field,
    u_curr: &Field,
    model: &VelocityModel,
    dt: f64,
    sponge: &SpongeBoundary,
    src_value: f64,
    src_cell: (usize, usize),
    order: SpaceOrder,
) -> Result<Field> {
    let shape = model.grid().shape();
    u_prev.ensure_shape(shape)?;
    u_curr.ensure_shape(shape)?;
    if src_cell.0 >= shape.0 || src_cell.1 >= shape.1 {
        return Err(Error::InvalidConfig("source cell outside the grid".into()));
    }
    let mut p = Propagator::unpadded(model, dt, sponge, order)?;
    let load = |f: &Field| {
        let mut v = p.new_field();
        for j in 0..shape.0 {
            for i in 0..shape.1 {
                v[p.model_index(j, i)] = f[(j, i)];
            }
        }
        v
    };
    let (prev, curr) = (load(u_prev), load(u_curr));
    let mut next = p.new_field();
    let k = p.model_index(src_cell.0, src_cell.1);
    let amp = p.injection_scale() * src_value;
    p.step(Mode::Forward, &prev, &curr, &mut next, |f| f[k] += amp);
    Ok(p.crop(&next))
}

/// Per-step source injection peak used to scale stability thresholds.
pub fn source_scale(model: &VelocityModel, dt: f64, src: &RickerSource) -> f64 {
    let g = model.grid();
    dt * dt * src.amplitude.abs() / (g.dx * g.dz)
}

/// Check `dt` against the stability limit of `model`.
pub fn check_cfl(model: &VelocityModel, dt: f64, order: SpaceOrder) -> Result<()> {
    let dt_max = cfl_max_dt(model, order);
    if dt > dt_max {
        Err(Error::CflViolation { dt, dt_max })
    } else {
        Ok(())
    }
}

/// Simulate one shot and record it at the receivers.
pub fn forward_model(
    model: &VelocityModel,
    acq: &Acquisition,
    src: &RickerSource,
    sponge: &SpongeBoundary,
    opts: &ModelingOptions,
) -> Result<(ShotGather, Option<WavefieldHistory>)> {
    src.validate()?;
    acq.validate(model.grid())?;
    check_cfl(model, acq.dt, opts.order)?;

    let mut prop = Propagator::new(model, acq.dt, sponge, opts.order)?;
    let src_cell = prop.nearest_cell(acq.source);
    let scale = prop.injection_scale();
    let receivers: Vec<Stencil4> = acq
        .receiver_xs
        .iter()
        .map(|&x| prop.bilinear(Point::new(x, acq.receiver_z)))
        .collect();
    let limit = DIVERGENCE_FACTOR * source_scale(model, acq.dt, src);

    let mut data = Field::zeros(acq.nt, receivers.len());
    let (nz, nx) = model.grid().shape();
    let stride = opts.save_stride.map(|s| s.max(1));
    let mut history = stride.map(|s| WavefieldHistory::new(nz, nx, s));
    let dt = acq.dt;

    let layout = prop.crop_layout();
    prop.run(
        Mode::Forward,
        acq.nt,
        limit,
        |n, next| next[src_cell] += scale * ricker(src, n as f64 * dt),
        |n, u| {
            for (r, st) in receivers.iter().enumerate() {
                data[(n, r)] = st.idx.iter().zip(st.w).map(|(&k, w)| w * u[k]).sum();
            }
            if let Some(h) = history.as_mut() {
                if n % h.save_stride == 0 {
                    h.push(layout.rows(u).flatten().copied());
                }
            }
        },
    )?;
    Ok((ShotGather::new(data, dt, acq.receiver_xs.clone())?, history))
}

#[cfg(test)]
mod tests;
