//! Pipeline configuration: one `key = value` per line, `#` starts a comment.
//!
//! Unknown and repeated keys are errors. Every key is optional; see
//! [`PipelineConfig::default_for`] for the defaults. Salt placement defaults
//! to a box derived from the grid, so set `grid.*` before relying on it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use seiswork_core::rtm::DEFAULT_SMOOTH_RADIUS;
use seiswork_core::velmodel::{Grid2D, LayerConfig, Point, SaltConfig};
use seiswork_core::wavesim::{
    Acquisition, ModelingOptions, RickerSource, SpaceOrder, SpongeBoundary,
};

use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &[
    "grid.nx",
    "grid.nz",
    "grid.dx",
    "grid.dz",
    "layers.n_min",
    "layers.n_max",
    "layers.v_top_min",
    "layers.v_top_max",
    "layers.v_increment_min",
    "layers.v_increment_max",
    "layers.wobble",
    "layers.thickness_jitter",
    "salt.n_min",
    "salt.n_max",
    "salt.points_min",
    "salt.points_max",
    "salt.v_min",
    "salt.v_max",
    "salt.x_min",
    "salt.x_max",
    "salt.z_min",
    "salt.z_max",
    "source.f0",
    "source.amplitude",
    "source.depth",
    "acq.dt",
    "acq.nt",
    "acq.receiver_depth",
    "acq.receiver_spacing",
    "fd.order",
    "sponge.width",
    "sponge.strength",
    "sponge.free_surface",
    "rtm.smooth_radius",
    "rtm.condition",
    "rtm.save_stride",
    "rtm.laplacian",
    "seed",
    "n_models",
    "shots_per_model",
    "output_dir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub grid: Grid2D,
    pub layers: LayerConfig,
    pub salt: SaltConfig,
    pub f0: f64,
    pub amplitude: f64,
    pub source_depth: f64,
    pub dt: f64,
    pub nt: usize,
    pub receiver_depth: f64,
    pub receiver_spacing: f64,
    pub order: SpaceOrder,
    pub sponge: SpongeBoundary,
    pub smooth_radius: usize,
    /// Mute the direct arrival and rotate traces by 90 degrees before migration.
    pub condition: bool,
    pub save_stride: usize,
    /// Store the Laplacian-filtered stack instead of the raw one.
    pub laplacian: bool,
    pub master_seed: u64,
    pub n_models: usize,
    pub shots_per_model: usize,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::default_for(Grid2D::default())
    }
}

impl PipelineConfig {
    pub fn default_for(grid: Grid2D) -> Self {
        Self {
            grid,
            layers: LayerConfig::default(),
            salt: SaltConfig::default_for(&grid),
            f0: 10.0,
            amplitude: 1.0,
            source_depth: 2.5 * grid.dz,
            dt: 1e-3,
            nt: 1500,
            receiver_depth: 2.5 * grid.dz,
            receiver_spacing: 2.0 * grid.dx,
            order: SpaceOrder::Second,
            sponge: SpongeBoundary::default(),
            smooth_radius: DEFAULT_SMOOTH_RADIUS,
            condition: true,
            save_stride: 1,
            laplacian: true,
            master_seed: 0,
            n_models: 1,
            shots_per_model: 3,
            output_dir: PathBuf::from("dataset"),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let map = parse_pairs(text)?;
        let mut v = Values { map };

        let nx = v.take("grid.nx")?.unwrap_or(Grid2D::default().nx);
        let nz = v.take("grid.nz")?.unwrap_or(Grid2D::default().nz);
        let dx = v.take("grid.dx")?.unwrap_or(Grid2D::default().dx);
        let dz = v.take("grid.dz")?.unwrap_or(Grid2D::default().dz);
        let grid = Grid2D::new(nx, nz, dx, dz)?;
        let mut c = Self::default_for(grid);

        let l = &mut c.layers;
        v.set(&mut l.n_layers.0, "layers.n_min")?;
        v.set(&mut l.n_layers.1, "layers.n_max")?;
        v.set(&mut l.v_top.0, "layers.v_top_min")?;
        v.set(&mut l.v_top.1, "layers.v_top_max")?;
        v.set(&mut l.v_increment.0, "layers.v_increment_min")?;
        v.set(&mut l.v_increment.1, "layers.v_increment_max")?;
        v.set(&mut l.interface_wobble_amp, "layers.wobble")?;
        v.set(&mut l.thickness_jitter, "layers.thickness_jitter")?;

        let s = &mut c.salt;
        v.set(&mut s.n_hulls.0, "salt.n_min")?;
        v.set(&mut s.n_hulls.1, "salt.n_max")?;
        v.set(&mut s.points_per_hull.0, "salt.points_min")?;
        v.set(&mut s.points_per_hull.1, "salt.points_max")?;
        v.set(&mut s.v_salt.0, "salt.v_min")?;
        v.set(&mut s.v_salt.1, "salt.v_max")?;
        v.set(&mut s.placement_box.x_min, "salt.x_min")?;
        v.set(&mut s.placement_box.x_max, "salt.x_max")?;
        v.set(&mut s.placement_box.z_min, "salt.z_min")?;
        v.set(&mut s.placement_box.z_max, "salt.z_max")?;

        v.set(&mut c.f0, "source.f0")?;
        v.set(&mut c.amplitude, "source.amplitude")?;
        v.set(&mut c.source_depth, "source.depth")?;
        v.set(&mut c.dt, "acq.dt")?;
        v.set(&mut c.nt, "acq.nt")?;
        v.set(&mut c.receiver_depth, "acq.receiver_depth")?;
        v.set(&mut c.receiver_spacing, "acq.receiver_spacing")?;
        if let Some(order) = v.take::<usize>("fd.order")? {
            c.order = SpaceOrder::from_order(order)?;
        }
        v.set(&mut c.sponge.width, "sponge.width")?;
        v.set(&mut c.sponge.strength, "sponge.strength")?;
        v.set(&mut c.sponge.free_surface, "sponge.free_surface")?;
        v.set(&mut c.smooth_radius, "rtm.smooth_radius")?;
        v.set(&mut c.condition, "rtm.condition")?;
        v.set(&mut c.save_stride, "rtm.save_stride")?;
        v.set(&mut c.laplacian, "rtm.laplacian")?;
        v.set(&mut c.master_seed, "seed")?;
        v.set(&mut c.n_models, "n_models")?;
        v.set(&mut c.shots_per_model, "shots_per_model")?;
        if let Some(dir) = v.map.remove("output_dir") {
            c.output_dir = PathBuf::from(dir.1);
        }

        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text form; [`PipelineConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let l = &self.layers;
        let s = &self.salt;
        let b = &s.placement_box;
        let rows: Vec<(&str, String)> = vec![
            ("grid.nx", self.grid.nx.to_string()),
            ("grid.nz", self.grid.nz.to_string()),
            ("grid.dx", self.grid.dx.to_string()),
            ("grid.dz", self.grid.dz.to_string()),
            ("layers.n_min", l.n_layers.0.to_string()),
            ("layers.n_max", l.n_layers.1.to_string()),
            ("layers.v_top_min", l.v_top.0.to_string()),
            ("layers.v_top_max", l.v_top.1.to_string()),
            ("layers.v_increment_min", l.v_increment.0.to_string()),
            ("layers.v_increment_max", l.v_increment.1.to_string()),
            ("layers.wobble", l.interface_wobble_amp.to_string()),
            ("layers.thickness_jitter", l.thickness_jitter.to_string()),
            ("salt.n_min", s.n_hulls.0.to_string()),
            ("salt.n_max", s.n_hulls.1.to_string()),
            ("salt.points_min", s.points_per_hull.0.to_string()),
            ("salt.points_max", s.points_per_hull.1.to_string()),
            ("salt.v_min", s.v_salt.0.to_string()),
            ("salt.v_max", s.v_salt.1.to_string()),
            ("salt.x_min", b.x_min.to_string()),
            ("salt.x_max", b.x_max.to_string()),
            ("salt.z_min", b.z_min.to_string()),
            ("salt.z_max", b.z_max.to_string()),
            ("source.f0", self.f0.to_string()),
            ("source.amplitude", self.amplitude.to_string()),
            ("source.depth", self.source_depth.to_string()),
            ("acq.dt", self.dt.to_string()),
            ("acq.nt", self.nt.to_string()),
            ("acq.receiver_depth", self.receiver_depth.to_string()),
            ("acq.receiver_spacing", self.receiver_spacing.to_string()),
            ("fd.order", self.order.order().to_string()),
            ("sponge.width", self.sponge.width.to_string()),
            ("sponge.strength", self.sponge.strength.to_string()),
            ("sponge.free_surface", self.sponge.free_surface.to_string()),
            ("rtm.smooth_radius", self.smooth_radius.to_string()),
            ("rtm.condition", self.condition.to_string()),
            ("rtm.save_stride", self.save_stride.to_string()),
            ("rtm.laplacian", self.laplacian.to_string()),
            ("seed", self.master_seed.to_string()),
            ("n_models", self.n_models.to_string()),
            ("shots_per_model", self.shots_per_model.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
        ];
        rows.into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.grid.validate()?;
        self.layers.validate()?;
        self.salt.validate(&self.grid, &self.layers)?;
        self.sponge.validate()?;
        RickerSource::new(self.f0, self.amplitude)?;
        if self.n_models < 1 {
            return bad("n_models must be at least 1".into());
        }
        if self.shots_per_model < 1 {
            return bad("shots_per_model must be at least 1".into());
        }
        if self.save_stride < 1 {
            return bad("rtm.save_stride must be at least 1".into());
        }
        if !(self.receiver_spacing.is_finite() && self.receiver_spacing > 0.0) {
            return bad("acq.receiver_spacing must be positive".into());
        }
        if self.receiver_xs().is_empty() {
            return bad("receiver spacing leaves no receivers inside the grid".into());
        }
        for k in 0..self.shots_per_model {
            self.acquisition(k).validate(&self.grid)?;
        }
        Ok(())
    }

    pub fn source(&self) -> RickerSource {
        RickerSource::new(self.f0, self.amplitude).expect("validated source")
    }

    /// Receivers every `receiver_spacing` meters, from two cells in from the
    /// left edge to two cells in from the right.
    pub fn receiver_xs(&self) -> Vec<f64> {
        let lo = 2.0 * self.grid.dx;
        let hi = self.grid.width() - 2.0 * self.grid.dx;
        let n = ((hi - lo) / self.receiver_spacing + 1e-9).floor();
        if n.is_nan() || n < 0.0 {
            return Vec::new();
        }
        (0..=n as usize)
            .map(|k| lo + k as f64 * self.receiver_spacing)
            .collect()
    }

    /// Shot `k` sits at `x = W (k + 1) / (shots + 1)`.
    pub fn shot_x(&self, k: usize) -> f64 {
        self.grid.width() * (k + 1) as f64 / (self.shots_per_model + 1) as f64
    }

    pub fn acquisition(&self, k: usize) -> Acquisition {
        Acquisition {
            source: Point::new(self.shot_x(k), self.source_depth),
            receiver_xs: self.receiver_xs(),
            receiver_z: self.receiver_depth,
            dt: self.dt,
            nt: self.nt,
        }
    }

    pub fn modeling_options(&self) -> ModelingOptions {
        ModelingOptions {
            order: self.order,
            save_stride: None,
        }
    }
}

fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {line_no}: expected `key = value`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!(
                "line {line_no}: unknown key `{key}`"
            )));
        }
        if value.is_empty() {
            return Err(CliError::Config(format!(
                "line {line_no}: `{key}` has no value"
            )));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line_no, value.to_string())) {
            return Err(CliError::Config(format!(
                "line {line_no}: `{key}` already set on line {first}"
            )));
        }
    }
    Ok(map)
}

struct Values {
    map: BTreeMap<String, (usize, String)>,
}

impl Values {
    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|_| {
                CliError::Config(format!("line {line}: cannot parse `{raw}` for `{key}`"))
            }),
        }
    }

    fn set<T: std::str::FromStr>(&mut self, slot: &mut T, key: &str) -> Result<()> {
        if let Some(v) = self.take(key)? {
            *slot = v;
        }
        Ok(())
    }
}
