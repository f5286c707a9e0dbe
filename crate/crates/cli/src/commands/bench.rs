use std::path::Path;

use serde::Serialize;
use topolayer::topologize_image;

use crate::config::ExperimentConfig;
use crate::data::train_subset;
use crate::error::CliError;
use crate::output::{snapshot, write_csv};

/// Binarization thresholds cycled through by consecutive repetitions.
pub const THRESHOLDS: [f32; 4] = [0.3, 0.4, 0.5, 0.6];

#[derive(Serialize)]
struct BenchRow {
    index: usize,
    duration_s: f64,
    space_reduction_ratio: f64,
}

pub const BENCH_HEADER: &[&str] = &["index", "duration_s", "space_reduction_ratio"];

/// Repetition `k` topologizes subset image `(k / 4) % subset` at threshold
/// `THRESHOLDS[k % 4]`, so 64 repetitions cover 16 images at four
/// thresholds each. Runs one image at a time so that timings do not compete
/// for cores.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let ds = train_subset(cfg)?;
    let topo = cfg.topologize();
    let mut rows = Vec::with_capacity(cfg.repetitions);
    for k in 0..cfg.repetitions {
        let index = (k / THRESHOLDS.len()) % ds.len();
        let threshold = THRESHOLDS[k % THRESHOLDS.len()];
        let (_, trace) =
            topologize_image(&ds.images()[index], &topo, threshold).map_err(|e| CliError::Internal(e.into()))?;
        rows.push(BenchRow {
            index,
            duration_s: trace.duration.as_secs_f64(),
            space_reduction_ratio: trace.space_reduction_ratio,
        });
    }
    let thresholds: Vec<String> = THRESHOLDS.iter().map(|t| t.to_string()).collect();
    let snap = snapshot(&format!("{}bench_thresholds = {}\n", cfg.to_text(), thresholds.join(",")));
    write_csv(out, &snap, BENCH_HEADER, &rows)
}
