//! Random layered velocity models with salt bodies.
//!
//! A model is built in three stages: a layered sediment background whose
//! interfaces are perturbed by smooth sinusoids, a salt body formed as the
//! union of several random convex hulls, and the insertion of a constant salt
//! velocity into the rasterized body. Every stage is a pure function of its
//! configuration and seed.

mod hull;
mod raster;

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use hull::{convex_hull, cross, ConvexPolygon, Point};
pub use raster::rasterize_union;

use crate::error::{Error, Result};
use crate::field::{Field, Mask};
use crate::rng::{mix, SplitMix64};

/// Slowest velocity any generator may produce (m/s).
pub const MIN_VELOCITY: f64 = 1400.0;
/// Fastest velocity any generator may produce (m/s).
pub const MAX_VELOCITY: f64 = 6000.0;
/// Accepted salt velocities (m/s).
pub const SALT_VELOCITY_BOUNDS: (f64, f64) = (3500.0, 6000.0);

const WOBBLE_WEIGHTS: [f64; 3] = [6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub nz: usize,
    pub dx: f64,
    pub dz: f64,
}

impl Default for Grid2D {
    /// 201 x 201 cells at 10 m (2 km square).
    fn default() -> Self {
        Self {
            nx: 201,
            nz: 201,
            dx: 10.0,
            dz: 10.0,
        }
    }
}

impl Grid2D {
    pub fn new(nx: usize, nz: usize, dx: f64, dz: f64) -> Result<Self> {
        let g = Self { nx, nz, dx, dz };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 16 || self.nz < 16 {
            return Err(Error::InvalidConfig(format!(
                "grid must be at least 16x16 cells, got {}x{}",
                self.nx, self.nz
            )));
        }
        if !(self.dx.is_finite() && self.dz.is_finite() && self.dx > 0.0 && self.dz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid spacing must be positive and finite, got dx={} dz={}",
                self.dx, self.dz
            )));
        }
        Ok(())
    }

    /// Horizontal extent in meters.
    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    /// Vertical extent in meters.
    pub fn depth(&self) -> f64 {
        self.nz as f64 * self.dz
    }

    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    #[inline]
    pub fn z_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dz
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nz, self.nx)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityModel {
    grid: Grid2D,
    vp: Field,
}

impl VelocityModel {
    pub fn new(grid: Grid2D, vp: Field) -> Result<Self> {
        grid.validate()?;
        vp.ensure_shape(grid.shape())?;
        if !vp.as_slice().iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(Error::InvalidConfig(
                "velocities must be finite and positive".into(),
            ));
        }
        Ok(Self { grid, vp })
    }

    pub fn constant(grid: Grid2D, v: f64) -> Result<Self> {
        Self::new(grid, Field::filled(grid.nz, grid.nx, v))
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn vp(&self) -> &Field {
        &self.vp
    }

    pub fn into_field(self) -> Field {
        self.vp
    }

    pub fn v_min(&self) -> f64 {
        self.vp.min_max().0
    }

    pub fn v_max(&self) -> f64 {
        self.vp.min_max().1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerConfig {
    /// Closed interval for the number of layers.
    pub n_layers: (usize, usize),
    /// Velocity of the top layer (m/s).
    pub v_top: (f64, f64),
    /// Velocity increase from one layer to the next (m/s).
    pub v_increment: (f64, f64),
    /// Maximum vertical perturbation of each interface (m).
    pub interface_wobble_amp: f64,
    /// Random shift of each nominal interface depth, as a fraction of the
    /// nominal layer thickness. Zero gives equally thick layers.
    pub thickness_jitter: f64,
    pub seed: u64,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            n_layers: (3, 6),
            v_top: (1500.0, 2000.0),
            v_increment: (100.0, 300.0),
            interface_wobble_amp: 40.0,
            thickness_jitter: 0.3,
            seed: 0,
        }
    }
}

impl LayerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_layers.0 < 1 || self.n_layers.0 > self.n_layers.1 {
            return bad("layer count range must be a non-empty interval starting at 1 or more");
        }
        if !ordered(self.v_top) || !ordered(self.v_increment) {
            return bad("velocity ranges must be finite, non-empty intervals");
        }
        if self.v_top.0 < MIN_VELOCITY {
            return bad("top-layer velocity must be at least 1400 m/s");
        }
        if self.v_increment.0 < 0.0 {
            return bad("layer velocity increments must be non-negative");
        }
        if !(self.interface_wobble_amp.is_finite() && self.interface_wobble_amp >= 0.0) {
            return bad("interface wobble amplitude must be finite and non-negative");
        }
        if !(0.0..0.5).contains(&self.thickness_jitter) {
            return bad("thickness jitter must lie in [0, 0.5)");
        }
        if self.velocity_bounds().1 > MAX_VELOCITY {
            return Err(Error::InvalidConfig(format!(
                "deepest layer may reach {} m/s, above the {MAX_VELOCITY} m/s limit",
                self.velocity_bounds().1
            )));
        }
        Ok(())
    }

    /// Smallest and largest velocity this configuration can produce.
    pub fn velocity_bounds(&self) -> (f64, f64) {
        (
            self.v_top.0,
            self.v_top.1 + (self.n_layers.1 - 1) as f64 * self.v_increment.1,
        )
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementBox {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl PlacementBox {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.z_max - self.z_min)
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.z >= self.z_min && p.z <= self.z_max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaltConfig {
    pub n_hulls: (usize, usize),
    pub points_per_hull: (usize, usize),
    pub v_salt: (f64, f64),
    pub placement_box: PlacementBox,
}

impl SaltConfig {
    /// 1-3 hulls of 4-8 points at 4000-4800 m/s, placed in the central 60% of
    /// the width between 30% and 80% of the depth.
    pub fn default_for(grid: &Grid2D) -> Self {
        let (w, h) = (grid.width(), grid.depth());
        Self {
            n_hulls: (1, 3),
            points_per_hull: (4, 8),
            v_salt: (4000.0, 4800.0),
            placement_box: PlacementBox {
                x_min: 0.2 * w,
                x_max: 0.8 * w,
                z_min: 0.3 * h,
                z_max: 0.8 * h,
            },
        }
    }

    pub fn validate(&self, grid: &Grid2D, layers: &LayerConfig) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.n_hulls.0 > self.n_hulls.1 {
            return bad("hull count range is empty");
        }
        if self.points_per_hull.0 < 3 || self.points_per_hull.0 > self.points_per_hull.1 {
            return bad("points per hull must be an interval starting at 3 or more");
        }
        if !ordered(self.v_salt)
            || self.v_salt.0 < SALT_VELOCITY_BOUNDS.0
            || self.v_salt.1 > SALT_VELOCITY_BOUNDS.1
        {
            return bad("salt velocity range must lie within [3500, 6000] m/s");
        }
        if self.v_salt.0 <= layers.velocity_bounds().1 {
            return Err(Error::InvalidConfig(format!(
                "salt velocity {} m/s must exceed the fastest sediment velocity {} m/s",
                self.v_salt.0,
                layers.velocity_bounds().1
            )));
        }
        let b = &self.placement_box;
        let finite = [b.x_min, b.x_max, b.z_min, b.z_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || b.x_min >= b.x_max
            || b.z_min >= b.z_max
            || b.x_min < 0.0
            || b.z_min < 0.0
            || b.x_max > grid.width()
            || b.z_max > grid.depth()
        {
            return bad("salt placement box must be a non-empty rectangle inside the grid");
        }
        Ok(())
    }
}

fn ordered((lo, hi): (f64, f64)) -> bool {
    lo.is_finite() && hi.is_finite() && lo <= hi
}

/// Layered sediment background.
///
/// Nominal interfaces split the depth into equal layers; each is shifted by
/// `thickness_jitter` and perturbed laterally by a sum of three sinusoids
/// (wavelengths of one, one half and one third of the grid width, weights
/// 6:3:2, random phases) scaled to `interface_wobble_amp`. A cell belongs to
/// the layer below every interface lying at or above its center.
pub fn generate_background(grid: &Grid2D, cfg: &LayerConfig) -> Result<VelocityModel> {
    grid.validate()?;
    cfg.validate()?;
    if cfg.n_layers.1 > grid.nz {
        return Err(Error::InvalidConfig(format!(
            "{} layers cannot fit in {} rows",
            cfg.n_layers.1, grid.nz
        )));
    }

    let mut rng = SplitMix64::new(cfg.seed);
    let n_layers = rng.range_inclusive(cfg.n_layers.0, cfg.n_layers.1);
    let mut velocities = Vec::with_capacity(n_layers);
    velocities.push(rng.uniform(cfg.v_top.0, cfg.v_top.1));
    for k in 1..n_layers {
        let inc = rng.uniform(cfg.v_increment.0, cfg.v_increment.1);
        velocities.push(velocities[k - 1] + inc);
    }

    let thickness = grid.depth() / n_layers as f64;
    let interfaces: Vec<(f64, [f64; 3])> = (1..n_layers)
        .map(|k| {
            let shift = cfg.thickness_jitter * thickness * (2.0 * rng.next_f64() - 1.0);
            let phases = [
                rng.uniform(0.0, 2.0 * PI),
                rng.uniform(0.0, 2.0 * PI),
                rng.uniform(0.0, 2.0 * PI),
            ];
            (k as f64 * thickness + shift, phases)
        })
        .collect();

    let width = grid.width();
    let mut depths = Field::zeros(interfaces.len(), grid.nx);
    for (k, (base, phases)) in interfaces.iter().enumerate() {
        for i in 0..grid.nx {
            let x = grid.x_center(i);
            let wobble: f64 = WOBBLE_WEIGHTS
                .iter()
                .zip(phases)
                .enumerate()
                .map(|(h, (w, ph))| w * libm::sin(2.0 * PI * (h + 1) as f64 * x / width + ph))
                .sum();
            depths[(k, i)] = base + cfg.interface_wobble_amp * wobble;
        }
    }

    let vp = Field::from_fn(grid.nz, grid.nx, |j, i| {
        let z = grid.z_center(j);
        let layer = (0..interfaces.len())
            .filter(|&k| depths[(k, i)] <= z)
            .count();
        velocities[layer]
    });
    VelocityModel::new(*grid, vp)
}

/// Replace the velocity of every masked cell by `v_salt`.
pub fn insert_salt(model: &VelocityModel, mask: &Mask, v_salt: f64) -> Result<VelocityModel> {
    mask.ensure_shape(model.grid.shape())?;
    if !(SALT_VELOCITY_BOUNDS.0..=SALT_VELOCITY_BOUNDS.1).contains(&v_salt) {
        return Err(Error::InvalidConfig(format!(
            "salt velocity {v_salt} m/s outside [3500, 6000]"
        )));
    }
    let mut vp = model.vp.clone();
    vp.as_mut_slice()
        .iter_mut()
        .zip(mask.as_slice())
        .filter(|(_, &m)| m)
        .for_each(|(v, _)| *v = v_salt);
    Ok(VelocityModel {
        grid: model.grid,
        vp,
    })
}

/// Sample the random convex hulls making up one salt body.
pub fn sample_salt_hulls(salt: &SaltConfig, rng: &mut SplitMix64) -> Vec<ConvexPolygon> {
    const ATTEMPTS: usize = 8;
    let b = salt.placement_box;
    let n_hulls = rng.range_inclusive(salt.n_hulls.0, salt.n_hulls.1);
    let mut hulls = Vec::with_capacity(n_hulls);
    for _ in 0..n_hulls {
        for _ in 0..ATTEMPTS {
            let n_pts = rng.range_inclusive(salt.points_per_hull.0, salt.points_per_hull.1);
            let pts: Vec<Point> = (0..n_pts)
                .map(|_| Point::new(rng.uniform(b.x_min, b.x_max), rng.uniform(b.z_min, b.z_max)))
                .collect();
            if let Ok(h) = convex_hull(&pts) {
                hulls.push(h);
                break;
            }
        }
    }
    hulls
}

/// Full velocity-generation procedure: background, random hulls, rasterized
/// union, salt insertion.
///
/// `seed` drives both stages: the background is generated with
/// `LayerConfig { seed, .. }` and the salt body from the derived stream
/// `mix(seed, 1)`.
pub fn generate_model(
    grid: &Grid2D,
    layers: &LayerConfig,
    salt: &SaltConfig,
    seed: u64,
) -> Result<VelocityModel> {
    salt.validate(grid, layers)?;
    let background = generate_background(
        grid,
        &LayerConfig {
            seed,
            ..layers.clone()
        },
    )?;

    let mut rng = SplitMix64::new(mix(seed, 1));
    let v_salt = rng.uniform(salt.v_salt.0, salt.v_salt.1);
    let hulls = sample_salt_hulls(salt, &mut rng);
    if hulls.is_empty() {
        return Ok(background);
    }
    let mask = rasterize_union(&hulls, grid);
    insert_salt(&background, &mask, v_salt)
}
