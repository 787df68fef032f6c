//! Reverse-time migration with the zero-lag cross-correlation imaging condition.
//!
//! The receiver wavefield is obtained by running the discrete adjoint of the
//! forward propagator backward in time with the recorded traces injected at
//! the receiver positions (bilinear spreading, the transpose of receiver
//! sampling). Correlating it against the stored source wavefield at matched
//! steps gives `image(x, z) = sum_t u_s(t, x, z) u_r(t, x, z)`.
//!
//! Recorded gathers are usually conditioned first with [`condition_gather`]:
//! the direct arrival is muted and the traces are rotated by 90 degrees.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::velmodel::{Grid2D, Point, VelocityModel};
use crate::wavesim::{
    check_cfl, forward_model, CropLayout, Mode, ModelingOptions, Propagator, RickerSource,
    ShotGather, SpongeBoundary, Stencil4,
};

/// Default smoothing radius (cells) for the migration velocity.
pub const DEFAULT_SMOOTH_RADIUS: usize = 8;

/// Smoothed velocity used for migration.
#[derive(Debug, Clone, PartialEq)]
pub struct MigrationModel {
    model: VelocityModel,
    radius: usize,
}

impl MigrationModel {
    pub fn model(&self) -> &VelocityModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid2D {
        self.model.grid()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Largest absolute difference between neighboring cells (m/s per cell).
    pub fn max_jump(&self) -> f64 {
        let vp = self.model.vp();
        let mut m = 0.0f64;
        for j in 0..vp.rows() {
            for i in 0..vp.cols() {
                if i + 1 < vp.cols() {
                    m = m.max((vp[(j, i + 1)] - vp[(j, i)]).abs());
                }
                if j + 1 < vp.rows() {
                    m = m.max((vp[(j + 1, i)] - vp[(j, i)]).abs());
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtmImage {
    pub grid: Grid2D,
    pub values: Field,
}

impl RtmImage {
    pub fn new(grid: Grid2D, values: Field) -> Result<Self> {
        values.ensure_shape(grid.shape())?;
        if !values.is_finite() {
            return Err(Error::NonFinite("RTM image"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: Field::zeros(grid.nz, grid.nx),
        }
    }
}

/// Normalized Gaussian taps `w[-h..=h]` for `sigma`, truncated at `h = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let h = libm::ceil(3.0 * sigma) as isize;
    let mut w: Vec<f64> = (-h..=h)
        .map(|k| libm::exp(-((k * k) as f64) / (2.0 * sigma * sigma)))
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Half-sample symmetric reflection of `i` into `0..n` (`-1 -> 0`, `n -> n - 1`).
pub fn reflect_index(mut i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    i = i.rem_euclid(period);
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Separable Gaussian blur with reflecting boundaries.
pub fn gaussian_blur(field: &Field, sigma: f64) -> Field {
    let w = gaussian_kernel(sigma);
    let h = (w.len() / 2) as isize;
    let (rows, cols) = field.shape();
    let horiz = Field::from_fn(rows, cols, |j, i| {
        w.iter()
            .enumerate()
            .map(|(k, wk)| wk * field[(j, reflect_index(i as isize + k as isize - h, cols))])
            .sum()
    });
    Field::from_fn(rows, cols, |j, i| {
        w.iter()
            .enumerate()
            .map(|(k, wk)| wk * horiz[(reflect_index(j as isize + k as isize - h, rows), i)])
            .sum()
    })
}

/// Gaussian-smoothed copy of `model` with `sigma = radius / 2`. Radius 0 is the identity.
pub fn smooth_model(model: &VelocityModel, radius: usize) -> Result<MigrationModel> {
    let vp = if radius == 0 {
        model.vp().clone()
    } else {
        gaussian_blur(model.vp(), radius as f64 / 2.0)
    };
    Ok(MigrationModel {
        model: VelocityModel::new(*model.grid(), vp)?,
        radius,
    })
}

fn check_gather(gather: &ShotGather, acq: &crate::wavesim::Acquisition) -> Result<()> {
    if gather.data.shape() != (acq.nt, acq.n_receivers()) {
        return Err(Error::DimensionMismatch {
            expected: (acq.nt, acq.n_receivers()),
            found: gather.data.shape(),
        });
    }
    if gather.receiver_xs != acq.receiver_xs || gather.dt != acq.dt {
        return Err(Error::InvalidConfig(format!(
            "gather geometry (dt {}, {} receivers) does not match the acquisition",
            gather.dt,
            gather.receiver_xs.len()
        )));
    }
    Ok(())
}

/// Back-propagate `gather` through `mig` with the adjoint propagator.
///
/// `observe(n, layout, w)` is called with the adjoint state that pairs with
/// the forward state after step `n`, in decreasing `n`. With
/// `scale = dt^2 / (dx dz)`, `scale * w` at model cell `c` is the adjoint of
/// forward modeling with respect to a source added at `c` on step `n`.
pub fn back_propagate(
    mig: &VelocityModel,
    gather: &ShotGather,
    acq: &crate::wavesim::Acquisition,
    sponge: &SpongeBoundary,
    opts: &ModelingOptions,
    mut observe: impl FnMut(usize, &CropLayout, &[f64]),
) -> Result<()> {
    acq.validate(mig.grid())?;
    check_gather(gather, acq)?;
    check_cfl(mig, acq.dt, opts.order)?;

    let mut prop = Propagator::new(mig, acq.dt, sponge, opts.order)?;
    let receivers: Vec<Stencil4> = acq
        .receiver_xs
        .iter()
        .map(|&x| prop.bilinear(Point::new(x, acq.receiver_z)))
        .collect();
    let layout = prop.crop_layout();
    let nt = acq.nt;
    prop.run(
        Mode::Adjoint,
        nt,
        f64::INFINITY,
        |m, next| {
            let row = gather.data.row(nt - 1 - m);
            for (st, &d) in receivers.iter().zip(row) {
                for (&k, w) in st.idx.iter().zip(st.w) {
                    next[k] += w * d;
                }
            }
        },
        |m, w| observe(nt - 1 - m, &layout, w),
    )
}

/// Migrate one shot.
pub fn rtm_shot(
    mig: &MigrationModel,
    gather: &ShotGather,
    acq: &crate::wavesim::Acquisition,
    src: &RickerSource,
    sponge: &SpongeBoundary,
    opts: &ModelingOptions,
) -> Result<RtmImage> {
    let model = mig.model();
    acq.validate(model.grid())?;
    check_gather(gather, acq)?;
    check_cfl(model, acq.dt, opts.order)?;

    let stride = opts.save_stride.unwrap_or(1).max(1);
    let fwd_opts = ModelingOptions {
        order: opts.order,
        save_stride: Some(stride),
    };
    let (_, history) = forward_model(model, acq, src, sponge, &fwd_opts)?;
    let history = history.expect("history requested");

    let grid = *model.grid();
    let mut image = Field::zeros(grid.nz, grid.nx);
    back_propagate(model, gather, acq, sponge, opts, |n, layout, w| {
        if n % stride != 0 {
            return;
        }
        let us = history.snapshot(n / stride);
        let img = image.as_mut_slice();
        for (j, row) in layout.rows(w).enumerate() {
            let base = j * layout.nx;
            for (i, &wr) in row.iter().enumerate() {
                img[base + i] += us[base + i] as f64 * wr;
            }
        }
    })?;
    RtmImage::new(grid, image)
}

/// Zero each trace up to the end of the direct arrival and ramp back in.
///
/// The cut time for a receiver at distance `d` from the source is
/// `d / v_direct + t0 + 1 / f0` (the wavelet has decayed to about 0.1% of its
/// peak one period after `t0`); a raised-cosine ramp of half a period follows.
pub fn mute_direct_arrival(
    gather: &ShotGather,
    acq: &crate::wavesim::Acquisition,
    src: &RickerSource,
    v_direct: f64,
) -> Result<ShotGather> {
    check_gather(gather, acq)?;
    if !(v_direct.is_finite() && v_direct > 0.0) {
        return Err(Error::InvalidConfig(
            "mute velocity must be positive".into(),
        ));
    }
    let ramp = 0.5 / src.f0;
    let mut data = gather.data.clone();
    for (r, &x) in acq.receiver_xs.iter().enumerate() {
        let (dx, dz) = (x - acq.source.x, acq.receiver_z - acq.source.z);
        let t_cut = libm::sqrt(dx * dx + dz * dz) / v_direct + src.t0 + 1.0 / src.f0;
        for n in 0..data.rows() {
            let t = n as f64 * gather.dt;
            let w = if t <= t_cut {
                0.0
            } else if t < t_cut + ramp {
                0.5 - 0.5 * libm::cos(core::f64::consts::PI * (t - t_cut) / ramp)
            } else {
                break;
            };
            data[(n, r)] *= w;
        }
    }
    ShotGather::new(data, gather.dt, gather.receiver_xs.clone())
}

/// Default Hilbert filter half-length in samples: two dominant periods.
pub fn default_hilbert_half_len(src: &RickerSource, dt: f64) -> usize {
    libm::ceil(2.0 / (src.f0 * dt)) as usize
}

/// Windowed FIR Hilbert transform of every trace (a 90 degree phase rotation).
///
/// Taps are `2 / (pi k)` for odd `k` in `-half_len..=half_len` and zero for
/// even `k`, under a Hann window. Samples outside the record count as zero.
/// Point sources recorded along a line and imaged by cross-correlation give
/// a reflector response in quadrature; rotating the traces first puts the
/// peak on the interface.
pub fn hilbert_traces(gather: &ShotGather, half_len: usize) -> Result<ShotGather> {
    if half_len == 0 {
        return Err(Error::InvalidConfig(
            "Hilbert half-length must be positive".into(),
        ));
    }
    let h = half_len as isize;
    let taps: Vec<f64> = (-h..=h)
        .map(|k| {
            if k % 2 == 0 {
                0.0
            } else {
                let x = k as f64;
                let hann = 0.5 + 0.5 * libm::cos(core::f64::consts::PI * x / (h + 1) as f64);
                hann * 2.0 / (core::f64::consts::PI * x)
            }
        })
        .collect();
    let d = &gather.data;
    let nt = d.rows() as isize;
    let data = Field::from_fn(d.rows(), d.cols(), |n, r| {
        let n = n as isize;
        let lo = (n - nt + 1).max(-h);
        let hi = n.min(h);
        (lo..=hi)
            .map(|k| taps[(k + h) as usize] * d[((n - k) as usize, r)])
            .sum()
    });
    ShotGather::new(data, gather.dt, gather.receiver_xs.clone())
}

/// Direct-arrival mute followed by the Hilbert rotation, the trace
/// conditioning applied before [`rtm_shot`] in the dataset pipeline.
pub fn condition_gather(
    gather: &ShotGather,
    acq: &crate::wavesim::Acquisition,
    src: &RickerSource,
    v_direct: f64,
) -> Result<ShotGather> {
    let muted = mute_direct_arrival(gather, acq, src, v_direct)?;
    hilbert_traces(&muted, default_hilbert_half_len(src, gather.dt))
}

/// Element-wise sum, accumulated in list order.
pub fn stack_images(images: &[RtmImage]) -> Result<RtmImage> {
    let first = images
        .first()
        .ok_or(Error::InvalidConfig("no images to stack".into()))?;
    let mut out = first.clone();
    for img in &images[1..] {
        if img.grid != first.grid {
            return Err(Error::DimensionMismatch {
                expected: first.grid.shape(),
                found: img.grid.shape(),
            });
        }
        out.values.add_assign(&img.values)?;
    }
    Ok(out)
}

/// 5-point Laplacian in cell units, edges replicated.
pub fn laplacian_filter(image: &RtmImage) -> RtmImage {
    let v = &image.values;
    let (rows, cols) = v.shape();
    let at = |j: isize, i: isize| {
        v[(
            j.clamp(0, rows as isize - 1) as usize,
            i.clamp(0, cols as isize - 1) as usize,
        )]
    };
    let values = Field::from_fn(rows, cols, |j, i| {
        let (j, i) = (j as isize, i as isize);
        at(j - 1, i) + at(j + 1, i) + at(j, i - 1) + at(j, i + 1) - 4.0 * at(j, i)
    });
    RtmImage {
        grid: image.grid,
        values,
    }
}
