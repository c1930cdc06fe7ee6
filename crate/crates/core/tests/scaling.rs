//! Kept in its own binary so no other test competes for the cores while
//! the timings are taken.

use std::time::{Duration, Instant};

use grmsim::analysis::FnWeight;
use grmsim::dynamics::SimParams;
use grmsim::harness::{run_sweep, SweepGrid};

fn timed_sweep(trials: usize) -> Duration {
    let params = SimParams {
        horizon_steps: 300,
        ..SimParams::default()
    };
    let grid = SweepGrid {
        cva_values: vec![30.0],
        t_grm_values: vec![4.0],
        t_loom_values: vec![32.0],
        trials_per_cell: trials,
        base_seed: 17,
    };
    (0..3)
        .map(|_| {
            let start = Instant::now();
            run_sweep(&grid, &params, FnWeight::PerAgent).unwrap();
            start.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn sweep_time_scales_linearly() {
    // on a worker pool the small sweep may not fill every worker; compare two
    // sizes that are both multiples of the pool size
    let unit = rayon::current_num_threads().max(1) * 4;
    let small = timed_sweep(unit);
    let large = timed_sweep(2 * unit);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    assert!((1.4..=2.6).contains(&ratio), "ratio {ratio:.2} ({small:?} vs {large:?})");
}
