//! Batch driver: velocity model, shot gathers and stacked RTM image per model.
//!
//! Layout under the output directory:
//!
//! ```text
//! manifest.tsv
//! model_0000/velocity.f32r
//! model_0000/shot_000.f32r
//! model_0000/rtm.f32r
//! ```
//!
//! Each model is generated from `mix(master_seed, m)` and owns its directory,
//! so workers never share a path. Results are collected by model index and
//! the manifest is written once at the end, which makes the output bytes
//! independent of the number of workers.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use seiswork_core::rng::mix;
use seiswork_core::rtm::{
    condition_gather, laplacian_filter, rtm_shot, smooth_model, stack_images, MigrationModel,
    RtmImage,
};
use seiswork_core::velmodel::{generate_model, Point};
use seiswork_core::wavesim::{
    forward_model, Acquisition, ModelingOptions, RickerSource, ShotGather, SpongeBoundary,
};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::f32r::Raster;
use crate::manifest::{self, Entry};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub entries: Vec<Entry>,
    /// `(model index, reason)` for every model that was dropped.
    pub failures: Vec<(usize, String)>,
}

impl DatasetReport {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn model_dir_name(m: usize) -> String {
    format!("model_{m:04}")
}

pub fn shot_file_name(k: usize) -> String {
    format!("shot_{k:03}.f32r")
}

/// Velocity of the migration model at the cell holding `p`; the direct wave
/// near the source travels at about this speed.
pub fn velocity_at(mig: &MigrationModel, p: Point) -> f64 {
    let g = mig.grid();
    let i = ((p.x / g.dx).floor().max(0.0) as usize).min(g.nx - 1);
    let j = ((p.z / g.dz).floor().max(0.0) as usize).min(g.nz - 1);
    mig.model().vp()[(j, i)]
}

/// Migrate one shot, optionally conditioning the gather first.
pub fn migrate_shot(
    mig: &MigrationModel,
    gather: &ShotGather,
    acq: &Acquisition,
    src: &RickerSource,
    sponge: &SpongeBoundary,
    opts: &ModelingOptions,
    condition: bool,
) -> Result<RtmImage> {
    let image = if condition {
        let v = velocity_at(mig, acq.source);
        let g = condition_gather(gather, acq, src, v)?;
        rtm_shot(mig, &g, acq, src, sponge, opts)?
    } else {
        rtm_shot(mig, gather, acq, src, sponge, opts)?
    };
    Ok(image)
}

/// Run the whole batch on `jobs` worker threads.
///
/// A model whose generation, modeling or migration fails is logged, its
/// directory removed, and the batch continues. Only a failure to create the
/// output directory or write the manifest is returned as an error.
pub fn run_dataset(cfg: &PipelineConfig, jobs: usize) -> Result<DatasetReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))?;

    let results: Vec<Result<Vec<Entry>>> = pool.install(|| {
        (0..cfg.n_models)
            .into_par_iter()
            .map(|m| run_model(cfg, m))
            .collect()
    });

    let mut report = DatasetReport {
        entries: Vec::new(),
        failures: Vec::new(),
    };
    for (m, r) in results.into_iter().enumerate() {
        match r {
            Ok(entries) => report.entries.extend(entries),
            Err(e) => {
                warn!("model {m} dropped: {e}");
                let dir = out.join(model_dir_name(m));
                if dir.exists() {
                    if let Err(e) = std::fs::remove_dir_all(&dir) {
                        warn!("could not remove {}: {e}", dir.display());
                    }
                }
                report.failures.push((m, e.to_string()));
            }
        }
    }
    let path = out.join(manifest::FILE_NAME);
    std::fs::write(&path, manifest::to_text(&report.entries))
        .map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

/// Generate, model and migrate model `m`, returning its manifest rows.
pub fn run_model(cfg: &PipelineConfig, m: usize) -> Result<Vec<Entry>> {
    let seed = mix(cfg.master_seed, m as u64);
    let rel_dir = model_dir_name(m);
    let dir: PathBuf = cfg.output_dir.join(&rel_dir);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut entries = Vec::with_capacity(cfg.shots_per_model + 2);
    let mut emit = |kind: &str, name: &str, raster: Raster| -> Result<()> {
        let bytes = raster.write(&dir.join(name))?;
        entries.push(Entry::for_bytes(
            m,
            kind,
            format!("{rel_dir}/{name}"),
            seed,
            &bytes,
        ));
        Ok(())
    };

    // Velocities and gathers are used as stored (f32) so that rerunning the
    // stages on the written files reproduces this model's outputs exactly.
    let velocity = Raster::from_grid_field(
        &cfg.grid,
        generate_model(&cfg.grid, &cfg.layers, &cfg.salt, seed)?.vp(),
    );
    let model = velocity.to_velocity_model()?;
    emit("velocity", "velocity.f32r", velocity)?;

    let mig = smooth_model(&model, cfg.smooth_radius)?;
    let src = cfg.source();
    let fwd = cfg.modeling_options();
    let rtm_opts = ModelingOptions {
        save_stride: Some(cfg.save_stride),
        ..fwd
    };
    let mut images = Vec::with_capacity(cfg.shots_per_model);
    for k in 0..cfg.shots_per_model {
        let acq = cfg.acquisition(k);
        let (gather, _) = forward_model(&model, &acq, &src, &cfg.sponge, &fwd)?;
        let stored = Raster::from_gather(&gather, acq.receiver_z);
        let gather = stored.to_gather(acq.receiver_xs.clone())?;
        emit("gather", &shot_file_name(k), stored)?;
        images.push(migrate_shot(
            &mig,
            &gather,
            &acq,
            &src,
            &cfg.sponge,
            &rtm_opts,
            cfg.condition,
        )?);
        info!("model {m} shot {k} done");
    }
    let mut image = stack_images(&images)?;
    if cfg.laplacian {
        image = laplacian_filter(&image);
    }
    emit(
        "rtm",
        "rtm.f32r",
        Raster::from_grid_field(&cfg.grid, &image.values),
    )?;
    Ok(entries)
}

/// Check every manifest row against the files on disk; returns the bad paths.
pub fn verify_dataset(dir: &Path) -> Result<Vec<String>> {
    let entries = manifest::read(dir)?;
    Ok(manifest::verify(dir, &entries))
}
