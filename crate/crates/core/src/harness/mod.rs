//! Configuration, parameter sweeps, CSV and SVG output, and the theorem
//! checks behind the command-line tool.

pub mod config;
pub mod frames;
pub mod output;
pub mod plot;
pub mod sweep;
pub mod verify;

use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use frames::{emit_frames, render_frame};
pub use output::{emit_cells_csv, emit_csv, read_csv};
pub use plot::{emit_scatter_svg, scatter_points, ScatterOptions, ScatterPoint};
pub use sweep::{run_sweep, trial_seed, SweepGrid, SweepRow, SweepTable};
pub use verify::{verify_theorems, Kernel, VerifyReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("nothing to plot: no cell has both metrics defined")]
    EmptyPlot,
    #[error("trial was run without trajectory logging")]
    NoTrajectory,
    #[error("{0}")]
    Invalid(String),
}
