use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use grmsim::analysis::{StopClass, TrialResult};
use grmsim::engine::{run_trial_with, TrialOptions};
use grmsim::harness::{
    emit_cells_csv, emit_csv, emit_frames, emit_scatter_svg, load_config, read_csv, run_sweep, scatter_points,
    verify_theorems, HarnessError, RunConfig, ScatterOptions,
};

/// Exit status of a run that found a counterexample.
const EXIT_COUNTEREXAMPLE: u8 = 1;
/// Exit status of bad configuration or unusable paths.
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "grmsim", version, about = "Regressive-motion collision avoidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write its event logs.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out/simulate")]
        out: PathBuf,
        /// Write the per-step trajectory CSV.
        #[arg(long)]
        log_trajectories: bool,
        /// Also render an SVG frame every this many steps.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run a parameter grid and write per-trial and per-cell CSV.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-trial CSV; cell summaries go next to it as `<stem>_cells.csv`.
        #[arg(long, default_value = "out/sweep.csv")]
        out: PathBuf,
        /// Overrides the config's `trials`.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Check the geometric theorems on random samples.
    Verify {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file.
        #[arg(long, default_value = "out/verify.txt")]
        out: PathBuf,
    },
    /// Scatter plot of mean mobility against mean safety per cell.
    Plot {
        /// Per-trial CSV written by `sweep`.
        input: PathBuf,
        #[arg(long, default_value = "out/scatter.svg")]
        out: PathBuf,
        /// Draw a bar at each cell's CVA angle.
        #[arg(long)]
        cva_bars: bool,
    },
}

fn config_or_default(path: Option<&Path>) -> Result<RunConfig, HarnessError> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.display().to_string(),
            source,
        }),
        None => Ok(()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn class_name(c: StopClass) -> &'static str {
    match c {
        StopClass::TruePositive => "tp",
        StopClass::FalsePositive => "fp",
        StopClass::Excluded => "excluded",
    }
}

fn stops_csv(r: &TrialResult) -> String {
    let mut s = String::from("t,agent,channel,class,causes\n");
    for (stop, class) in r.stops.iter().zip(&r.classes) {
        let causes: Vec<String> = stop.cause_agents.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            stop.t,
            stop.agent,
            stop.channel.as_str(),
            class_name(*class),
            causes.join(" ")
        );
    }
    s
}

fn collisions_csv(r: &TrialResult) -> String {
    let mut s = String::from("t,agent_a,agent_b\n");
    for c in &r.collisions {
        let _ = writeln!(s, "{},{},{}", c.t, c.pair.0, c.pair.1);
    }
    s
}

fn trajectory_csv(r: &TrialResult) -> String {
    let mut s = String::from("t,agent,x,y,heading,moving,sigma\n");
    for (t, states) in r.trajectory.iter().flatten().enumerate() {
        for a in states {
            let _ = writeln!(
                s,
                "{t},{},{:.6},{:.6},{:.6},{},{:.6}",
                a.id, a.pos.x, a.pos.y, a.heading, a.moving as u8, a.sigma
            );
        }
    }
    s
}

fn simulate(
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    log_trajectories: bool,
    stride: Option<usize>,
) -> Result<(), HarnessError> {
    let cfg = config_or_default(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    let options = TrialOptions {
        log_trajectory: log_trajectories || stride.is_some(),
        fn_weight: cfg.fn_weight,
    };
    let r = run_trial_with(&cfg.params, seed, options).map_err(|e| HarnessError::Invalid(e.to_string()))?;
    std::fs::create_dir_all(out).map_err(|source| HarnessError::Io {
        path: out.display().to_string(),
        source,
    })?;
    write_file(&out.join("stops.csv"), &stops_csv(&r))?;
    write_file(&out.join("collisions.csv"), &collisions_csv(&r))?;
    if log_trajectories {
        write_file(&out.join("trajectory.csv"), &trajectory_csv(&r))?;
    }
    if let Some(stride) = stride {
        let frames = emit_frames(&r, &out.join("frames"), stride)?;
        println!("frames: {}", frames.len());
    }
    let c = r.counts;
    println!("seed {seed}: tp {} fp {} tn {} fn {}", c.tp, c.fp, c.tn, c.fn_);
    println!("mobility {} safety {}", r.metrics.mobility, r.metrics.safety);
    Ok(())
}

fn cells_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sweep".into());
    out.with_file_name(format!("{stem}_cells.csv"))
}

fn sweep(config: Option<&Path>, seed: Option<u64>, out: &Path, trials: Option<usize>) -> Result<(), HarnessError> {
    let mut cfg = config_or_default(config)?;
    if let Some(s) = seed {
        cfg.grid.base_seed = s;
    }
    if let Some(t) = trials {
        cfg.grid.trials_per_cell = t;
    }
    let start = std::time::Instant::now();
    let table = run_sweep(&cfg.grid, &cfg.params, cfg.fn_weight)?;
    ensure_parent(out)?;
    emit_csv(&table, out)?;
    emit_cells_csv(&table.cells, &cells_path(out))?;
    let failures: usize = table.cells.iter().map(|c| c.failures).sum();
    println!(
        "{} trials in {} cells ({} failed) in {:.1} s",
        table.rows.len(),
        table.cells.len(),
        failures,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn verify(samples: usize, seed: u64, out: &Path) -> Result<bool, HarnessError> {
    ensure_parent(out)?;
    let report = verify_theorems(samples, seed, out)?;
    print!("{}", report.render());
    Ok(report.passed())
}

fn plot(input: &Path, out: &Path, cva_bars: bool) -> Result<(), HarnessError> {
    let table = read_csv(input)?;
    let points = scatter_points(&table.cells);
    ensure_parent(out)?;
    emit_scatter_svg(&points, out, ScatterOptions { cva_bars })?;
    println!("{} cells plotted", points.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            log_trajectories,
            stride,
        } => simulate(config.as_deref(), *seed, out, *log_trajectories, *stride).map(|_| true),
        Command::Sweep {
            config,
            seed,
            out,
            trials,
        } => sweep(config.as_deref(), *seed, out, *trials).map(|_| true),
        Command::Verify { samples, seed, out } => verify(*samples, *seed, out),
        Command::Plot { input, out, cva_bars } => plot(input, out, *cva_bars).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_COUNTEREXAMPLE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
