use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use seiswork::dataset::{migrate_shot, run_dataset, shot_file_name};
use seiswork::{render, CliError, PipelineConfig, Raster, Result};
use seiswork_core::metrics::{
    combined_loss, feature_loss, pixel_loss, ssim, FeatureExtractor, PixelNorm, SsimConfig,
};
use seiswork_core::nas::{
    discretize, param_count, AlphaMatrix, BackboneConfig, CellKind, CellSpec,
};
use seiswork_core::pruner::{apply_mask, level_prune, sparsity_of, SparsityTarget, WeightTensor};
use seiswork_core::rng::mix;
use seiswork_core::rtm::{laplacian_filter, smooth_model, stack_images};
use seiswork_core::velmodel::{generate_model, Point};
use seiswork_core::wavesim::{
    forward_model, Acquisition, ModelingOptions, RickerSource, SpaceOrder, SpongeBoundary,
};

/// Synthetic seismic dataset tools.
#[derive(Parser, Debug)]
#[command(name = "seiswork", version)]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate one velocity model.
    GenVelocity {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use the seed the dataset driver would give model INDEX.
        #[arg(long)]
        index: Option<u64>,
    },
    /// Model shot gathers, one file per source, into the --out directory.
    Forward {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        shots: ShotArgs,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1500)]
        nt: usize,
    },
    /// Migrate the gathers in a directory and stack the images.
    Rtm {
        #[arg(long)]
        gathers: PathBuf,
        /// True velocity model; it is smoothed before migration.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        shots: ShotArgs,
        #[arg(long, default_value_t = seiswork_core::rtm::DEFAULT_SMOOTH_RADIUS)]
        smooth_radius: usize,
        /// Migrate the raw gathers (no direct-arrival mute or phase rotation).
        #[arg(long)]
        no_condition: bool,
        /// Store the raw stack instead of its Laplacian.
        #[arg(long)]
        no_laplacian: bool,
        #[arg(long, default_value_t = 1)]
        save_stride: usize,
        /// Also write each shot's image here.
        #[arg(long)]
        partials: Option<PathBuf>,
    },
    /// Compare two rasters; prints `file_a,file_b,ssim,l1,l2,feature,combined`.
    Metrics {
        file_a: PathBuf,
        file_b: PathBuf,
        #[arg(long)]
        header: bool,
        /// Feature-loss weight in the combined loss.
        #[arg(long, default_value_t = 0.1)]
        lambda: f64,
        /// Pixel term of the combined loss.
        #[arg(long, value_enum, default_value_t = NormArg::L1)]
        norm: NormArg,
    },
    /// Level-prune a weight raster; prints `n,target_fraction,achieved_fraction`.
    Prune {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        fraction: f64,
    },
    /// Discretize an alpha matrix (CSV, one edge per row) into a genotype.
    NasDiscretize {
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        nodes: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Encoder)]
        kind: KindArg,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 16)]
        base_channels: u64,
        #[arg(long, default_value_t = 1)]
        in_channels: u64,
        #[arg(long, default_value_t = 1)]
        out_channels: u64,
        /// Count only the searched cells.
        #[arg(long)]
        no_fixed_layers: bool,
    },
    /// Run the full batch pipeline.
    Dataset {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a raster as an 8-bit PGM.
    Render {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ShotArgs {
    /// Source position `X,Z` in meters; repeat for several shots.
    #[arg(long = "src", required = true, value_parser = parse_point)]
    sources: Vec<Point>,
    /// `START,STEP,COUNT,DEPTH`; defaults to every second cell at 2.5 cells depth.
    #[arg(long, value_parser = parse_receivers)]
    receivers: Option<Receivers>,
    #[arg(long, default_value_t = 10.0)]
    f0: f64,
    #[arg(long, default_value_t = SpongeBoundary::default().width)]
    sponge_width: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Receivers {
    start: f64,
    step: f64,
    count: usize,
    depth: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Encoder,
    Decoder,
}

fn parse_floats(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != n {
        return Err(format!(
            "expected {n} comma-separated numbers, got {}",
            v.len()
        ));
    }
    Ok(v)
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let v = parse_floats(s, 2)?;
    Ok(Point::new(v[0], v[1]))
}

fn parse_receivers(s: &str) -> std::result::Result<Receivers, String> {
    let v = parse_floats(s, 4)?;
    if v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err(format!(
            "receiver count must be a positive integer, got {}",
            v[2]
        ));
    }
    Ok(Receivers {
        start: v[0],
        step: v[1],
        count: v[2] as usize,
        depth: v[3],
    })
}

impl ShotArgs {
    fn receivers_for(&self, grid: &seiswork_core::velmodel::Grid2D) -> Receivers {
        self.receivers.unwrap_or_else(|| {
            let cfg = PipelineConfig::default_for(*grid);
            let xs = cfg.receiver_xs();
            Receivers {
                start: xs[0],
                step: cfg.receiver_spacing,
                count: xs.len(),
                depth: cfg.receiver_depth,
            }
        })
    }

    fn acquisitions(
        &self,
        grid: &seiswork_core::velmodel::Grid2D,
        dt: f64,
        nt: usize,
    ) -> Vec<Acquisition> {
        let r = self.receivers_for(grid);
        let receiver_xs: Vec<f64> = (0..r.count).map(|k| r.start + k as f64 * r.step).collect();
        self.sources
            .iter()
            .map(|&source| Acquisition {
                source,
                receiver_xs: receiver_xs.clone(),
                receiver_z: r.depth,
                dt,
                nt,
            })
            .collect()
    }

    fn source(&self) -> Result<RickerSource> {
        Ok(RickerSource::new(self.f0, 1.0)?)
    }

    fn sponge(&self) -> SpongeBoundary {
        SpongeBoundary {
            width: self.sponge_width,
            ..SpongeBoundary::default()
        }
    }

    fn order(&self) -> Result<SpaceOrder> {
        Ok(SpaceOrder::from_order(self.order)?)
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {jobs} workers: {e}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Print to `out` if given, otherwise stdout.
fn emit_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

/// Exit codes: 0 success, 1 usage, configuration or stage failure, 2 when a
/// batch finished with some models dropped.
fn run(cli: Cli) -> Result<u8> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::GenVelocity { config, index } => {
            let cfg = match &config {
                Some(p) => PipelineConfig::load(p)?,
                None => PipelineConfig::default(),
            };
            let master = cli.seed.unwrap_or(cfg.master_seed);
            let seed = index.map_or(master, |m| mix(master, m));
            let model = generate_model(&cfg.grid, &cfg.layers, &cfg.salt, seed)?;
            let path = out.unwrap_or(Path::new("velocity.f32r"));
            Raster::from_grid_field(&cfg.grid, model.vp()).write(path)?;
            info!("wrote {} (seed {seed})", path.display());
        }
        Command::Forward {
            model,
            shots,
            dt,
            nt,
        } => {
            let model = Raster::read(&model)?.to_velocity_model()?;
            let acqs = shots.acquisitions(model.grid(), dt, nt);
            let (src, sponge) = (shots.source()?, shots.sponge());
            let opts = ModelingOptions {
                order: shots.order()?,
                save_stride: None,
            };
            let dir = out.unwrap_or(Path::new("gathers"));
            create_dir(dir)?;
            pool(cli.jobs)?.install(|| {
                acqs.par_iter().enumerate().try_for_each(|(k, acq)| {
                    let (gather, _) = forward_model(&model, acq, &src, &sponge, &opts)?;
                    Raster::from_gather(&gather, acq.receiver_z)
                        .write(&dir.join(shot_file_name(k)))?;
                    Ok::<_, CliError>(())
                })
            })?;
        }
        Command::Rtm {
            gathers,
            model,
            shots,
            smooth_radius,
            no_condition,
            no_laplacian,
            save_stride,
            partials,
        } => {
            if save_stride == 0 {
                return Err(CliError::Config("--save-stride must be at least 1".into()));
            }
            let model = Raster::read(&model)?.to_velocity_model()?;
            let grid = *model.grid();
            let mig = smooth_model(&model, smooth_radius)?;
            let first = Raster::read(&gathers.join(shot_file_name(0)))?;
            let acqs = shots.acquisitions(&grid, first.meta[0], first.rows);
            let (src, sponge) = (shots.source()?, shots.sponge());
            let opts = ModelingOptions {
                order: shots.order()?,
                save_stride: Some(save_stride),
            };
            if let Some(p) = &partials {
                create_dir(p)?;
            }
            let images = pool(cli.jobs)?.install(|| {
                acqs.par_iter()
                    .enumerate()
                    .map(|(k, acq)| {
                        let raster = Raster::read(&gathers.join(shot_file_name(k)))?;
                        if raster.meta[1] != acq.receiver_z {
                            return Err(CliError::Config(format!(
                                "shot {k} was recorded at depth {} m, not {} m",
                                raster.meta[1], acq.receiver_z
                            )));
                        }
                        let gather = raster.to_gather(acq.receiver_xs.clone())?;
                        let image =
                            migrate_shot(&mig, &gather, acq, &src, &sponge, &opts, !no_condition)?;
                        if let Some(p) = &partials {
                            Raster::from_grid_field(&grid, &image.values)
                                .write(&p.join(format!("rtm_{k:03}.f32r")))?;
                        }
                        Ok(image)
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            let mut image = stack_images(&images)?;
            if !no_laplacian {
                image = laplacian_filter(&image);
            }
            Raster::from_grid_field(&grid, &image.values)
                .write(out.unwrap_or(Path::new("rtm.f32r")))?;
        }
        Command::Metrics {
            file_a,
            file_b,
            header,
            lambda,
            norm,
        } => {
            let a = Raster::read(&file_a)?.to_field();
            let b = Raster::read(&file_b)?.to_field();
            let ext = FeatureExtractor::default();
            let norm = match norm {
                NormArg::L1 => PixelNorm::L1,
                NormArg::L2 => PixelNorm::L2,
            };
            let s = ssim(&a, &b, &SsimConfig::default())?;
            let l1 = pixel_loss(&a, &b, PixelNorm::L1)?;
            let l2 = pixel_loss(&a, &b, PixelNorm::L2)?;
            let feat = feature_loss(&a, &b, &ext)?;
            let comb = combined_loss(&a, &b, lambda, &ext, norm)?;
            let mut text = String::new();
            if header {
                text.push_str("file_a,file_b,ssim,l1,l2,feature,combined\n");
            }
            text.push_str(&format!(
                "{},{},{s},{l1:e},{l2:e},{feat:e},{comb:e}\n",
                file_a.display(),
                file_b.display()
            ));
            emit_text(out, &text)?;
        }
        Command::Prune { input, fraction } => {
            let raster = Raster::read(&input)?;
            let w = WeightTensor::new(raster.data.clone(), vec![raster.rows, raster.cols])?;
            let target = SparsityTarget::new(fraction)?;
            let pruned = apply_mask(&w, &level_prune(&w, target))?;
            let achieved = sparsity_of(&pruned)?;
            let path = out.map_or_else(|| input.with_extension("pruned.f32r"), Path::to_path_buf);
            Raster {
                data: pruned.values().to_vec(),
                ..raster
            }
            .write(&path)?;
            println!("{},{fraction},{achieved}", w.len());
        }
        Command::NasDiscretize {
            alpha,
            nodes,
            kind,
            depth,
            base_channels,
            in_channels,
            out_channels,
            no_fixed_layers,
        } => {
            let text = std::fs::read_to_string(&alpha).map_err(|e| CliError::io(&alpha, e))?;
            let rows = parse_csv(&text)?;
            let kind = match kind {
                KindArg::Encoder => CellKind::Encoder,
                KindArg::Decoder => CellKind::Decoder,
            };
            let cell = CellSpec::new(nodes, kind)?;
            let g = discretize(&AlphaMatrix::from_rows(&rows)?, &cell)?;
            let backbone = BackboneConfig {
                depth,
                base_channels,
                nodes_per_cell: nodes,
                in_channels,
                out_channels,
                fixed_layers: !no_fixed_layers,
            };
            let params = param_count(&g, &backbone)?;
            write_file(
                out.unwrap_or(Path::new("genotype.txt")),
                g.to_text().as_bytes(),
            )?;
            println!("param_count,{params}");
        }
        Command::Dataset { config } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.master_seed = seed;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir.to_path_buf();
            }
            let report = run_dataset(&cfg, cli.jobs)?;
            info!(
                "{} files written, {} of {} models failed",
                report.entries.len(),
                report.failures.len(),
                cfg.n_models
            );
            if !report.is_complete() {
                for (m, reason) in &report.failures {
                    eprintln!("model {m} failed: {reason}");
                }
                return Ok(2);
            }
        }
        Command::Render { input } => {
            let raster = Raster::read(&input)?;
            let path = out.map_or_else(|| input.with_extension("pgm"), Path::to_path_buf);
            write_file(&path, &render::to_pgm(&raster)?)?;
        }
    }
    Ok(0)
}

fn parse_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        CliError::Config(format!(
                            "alpha line {}: cannot parse `{}`",
                            n + 1,
                            v.trim()
                        ))
                    })
                })
                .collect()
        })
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
