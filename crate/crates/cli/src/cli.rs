//! Subcommands of the `costvalley` binary.
//!
//! Every command takes `--config <file>` (optional; defaults apply when
//! omitted), `--out <dir>`, any number of `--set section.key=value`
//! overrides and `--seed <n>`, which sets both `run.seed` and `ransac.seed`.
//! Exit statuses are listed on [`ExitCode`](crate::ExitCode).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use costvalley_core::config::ScenarioConfig;
use costvalley_core::grid::{inflate, rasterize};
use costvalley_core::perception::{segment_ground, PointCloud};
use costvalley_core::planner::plan_path;
use costvalley_core::sim::{run_scenario_with, tick, TickTrace};

use crate::config_file::load_config;
use crate::error::CliError;
use crate::formats::{self, GoalRecord};
use crate::pgm;

#[derive(Debug, Parser)]
#[command(
    name = "costvalley",
    version,
    about = "Cost-valley planning pipeline for a cone track"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file. With `simulate` this may also be a directory of them.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Override one config key, e.g. `--set planner.half_width=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the closed loop; writes trajectory.csv and metrics.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the per-tick log trace.jsonl for `replay`.
        #[arg(long)]
        trace: bool,
    },
    /// Plan on a PGM grid; writes nodes.csv and goal.json.
    Plan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        grid: PathBuf,
    },
    /// Ground removal, rasterization and inflation of a cloud CSV; writes
    /// raw.pgm and inflated.pgm.
    Perceive {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cloud: PathBuf,
    },
    /// Writes the configured track as cones.csv and centerline.csv.
    MakeTrack {
        #[command(flatten)]
        common: Common,
    },
    /// Recomputes ticks from a trace log, checks them against the log and
    /// writes each tick's grid and path.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
        /// Render only every n-th tick.
        #[arg(long, default_value_t = 1)]
        every: u64,
    },
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn format_err(path: &Path) -> impl FnOnce(formats::FormatError) -> CliError + '_ {
    move |source| CliError::Format {
        path: path.into(),
        source,
    }
}

impl Common {
    fn overrides(&self) -> Vec<String> {
        let mut all = self.overrides.clone();
        if let Some(seed) = self.seed {
            all.push(format!("run.seed={seed}"));
            all.push(format!("ransac.seed={seed}"));
        }
        all
    }

    fn load_from(&self, path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
        let text = match path {
            Some(p) => String::from_utf8_lossy(&read(p)?).into_owned(),
            None => String::new(),
        };
        load_config(&text, &self.overrides()).map_err(|source| CliError::Config {
            path: path.map_or_else(|| PathBuf::from("<defaults>"), Path::to_path_buf),
            source,
        })
    }

    fn load(&self) -> Result<ScenarioConfig, CliError> {
        self.load_from(self.config.as_deref())
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, trace } => simulate(&common, trace),
        Command::Plan { common, grid } => plan(&common, &grid),
        Command::Perceive { common, cloud } => perceive(&common, &cloud),
        Command::MakeTrack { common } => make_track(&common),
        Command::Replay {
            common,
            trace,
            every,
        } => replay(&common, &trace, every),
    }
}

fn simulate(common: &Common, trace: bool) -> Result<(), CliError> {
    let Some(dir) = common.config.as_deref().filter(|p| p.is_dir()) else {
        let cfg = common.load()?;
        return simulate_one(&cfg, &common.out, trace);
    };
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    // validate everything before running anything
    let jobs = files
        .iter()
        .map(|f| {
            let stem = f.file_stem().unwrap_or_default();
            Ok((common.load_from(Some(f))?, common.out.join(stem)))
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let workers = std::thread::available_parallelism()
        .map_or(1, usize::from)
        .min(jobs.len());
    let queue = Mutex::new(jobs.iter().enumerate());
    let results: Mutex<Vec<Option<Result<(), CliError>>>> =
        Mutex::new(jobs.iter().map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let Some((i, (cfg, out))) = queue.lock().expect("queue").next() else {
                    break;
                };
                let r = simulate_one(cfg, out, trace);
                results.lock().expect("results")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("results")
        .into_iter()
        .flatten()
        .collect()
}

fn simulate_one(cfg: &ScenarioConfig, out: &Path, trace: bool) -> Result<(), CliError> {
    let track = cfg.build_track();
    let every = cfg.run.dump_grids_every;
    let mut traces: Vec<TickTrace> = Vec::new();
    let mut dumps = Vec::new();
    let run = run_scenario_with(cfg, &track, |t| {
        if trace {
            traces.push(t.trace.clone());
        }
        if every > 0 && t.trace.tick % every == 0 {
            dumps.push((t.trace.tick, pgm::write_grid(&t.grid)));
        }
    });
    for (k, bytes) in dumps {
        write(&out.join("grids").join(format!("grid_{k:06}.pgm")), &bytes)?;
    }
    if trace {
        write(&out.join("trace.jsonl"), &formats::write_trace(&traces))?;
    }
    let csv = formats::write_csv(&run.trajectory).map_err(format_err(out))?;
    write(&out.join("trajectory.csv"), &csv)?;
    write(
        &out.join("metrics.json"),
        &formats::write_json(&run.metrics),
    )
}

fn plan(common: &Common, grid_path: &Path) -> Result<(), CliError> {
    let cfg = common.load()?;
    let grid = pgm::read_grid(&read(grid_path)?, cfg.grid.resolution()).map_err(|source| {
        CliError::Pgm {
            path: grid_path.into(),
            source,
        }
    })?;
    let path = plan_path(&grid, &cfg.planner)?;
    let rows = formats::node_rows(&path.nodes, &grid);
    let nodes = formats::write_csv(rows).map_err(format_err(&common.out))?;
    write(&common.out.join("nodes.csv"), &nodes)?;
    let goal = GoalRecord {
        forward_m: path.goal_point.forward,
        right_m: path.goal_point.right,
        cost: path.goal_cost,
    };
    write(&common.out.join("goal.json"), &formats::write_json(&goal))
}

fn perceive(common: &Common, cloud_path: &Path) -> Result<(), CliError> {
    let cfg = common.load()?;
    let points = formats::read_cloud(&read(cloud_path)?).map_err(format_err(cloud_path))?;
    let cloud = PointCloud::new(points, cfg.lidar.mount_height)?;
    let obstacles = segment_ground(&cloud, &cfg.ransac)?;
    let raw = rasterize(&obstacles.footprint(cfg.height_cutoff), cfg.grid);
    let inflated = inflate(&raw, &cfg.inflation);
    write(&common.out.join("raw.pgm"), &pgm::write_grid(&raw))?;
    write(
        &common.out.join("inflated.pgm"),
        &pgm::write_grid(&inflated),
    )
}

fn make_track(common: &Common) -> Result<(), CliError> {
    let cfg = common.load()?;
    let track = cfg.build_track();
    let cones =
        formats::write_csv(formats::xy_rows(&track.cones)).map_err(format_err(&common.out))?;
    let line =
        formats::write_csv(formats::xy_rows(&track.centerline)).map_err(format_err(&common.out))?;
    write(&common.out.join("cones.csv"), &cones)?;
    write(&common.out.join("centerline.csv"), &line)
}

fn replay(common: &Common, trace_path: &Path, every: u64) -> Result<(), CliError> {
    if every == 0 {
        return Err(CliError::Usage("--every must be at least 1".into()));
    }
    let cfg = common.load()?;
    let log = formats::read_trace(&read(trace_path)?).map_err(format_err(trace_path))?;
    let track = cfg.build_track();
    let mut prev_steer = 0.0;
    for rec in &log {
        if rec.tick % every == 0 {
            let out = tick(&track, &rec.state, prev_steer, &cfg, rec.tick);
            let mismatch = |what| CliError::ReplayMismatch {
                tick: rec.tick,
                what,
            };
            if out.trace.grid_hash != rec.grid_hash {
                return Err(mismatch("grid fingerprint"));
            }
            if out.trace.nodes != rec.nodes {
                return Err(mismatch("path nodes"));
            }
            if out.trace.steer != rec.steer {
                return Err(mismatch("steering angle"));
            }
            let k = rec.tick;
            write(
                &common.out.join(format!("grid_{k:06}.pgm")),
                &pgm::write_grid(&out.grid),
            )?;
            let rows = formats::node_rows(&out.trace.nodes, &out.grid);
            let csv = formats::write_csv(rows).map_err(format_err(&common.out))?;
            write(&common.out.join(format!("path_{k:06}.csv")), &csv)?;
        }
        prev_steer = rec.steer;
    }
    Ok(())
}
