use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use topolayer::batch::topologize_images_parallel;
use topolayer::dataset::write_idx;

use crate::config::ExperimentConfig;
use crate::data::train_subset;
use crate::error::CliError;
use crate::output::{snapshot, write_csv, write_record};

#[derive(Serialize)]
struct TraceRow {
    index: usize,
    label: u8,
    duration_s: f64,
    space_reduction_ratio: f64,
    initial_loss: f64,
    final_loss: f64,
}

pub const TRACE_HEADER: &[&str] = &["index", "label", "duration_s", "space_reduction_ratio", "initial_loss", "final_loss"];

/// Writes `trace.csv`, `record.txt` and the transformed subset as
/// `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let ds = train_subset(cfg)?;
    let topo = cfg.topologize();
    let start = Instant::now();
    let results = topologize_images_parallel(ds.images(), &topo, cfg.threshold);
    let total = start.elapsed();
    log::info!("topologized {} images in {total:.2?}", ds.len());

    let mut images = Vec::with_capacity(ds.len());
    let mut rows = Vec::with_capacity(ds.len());
    for (index, (r, &label)) in results.into_iter().zip(ds.labels()).enumerate() {
        let (img, trace) = r.map_err(|e| CliError::Internal(e.into()))?;
        rows.push(TraceRow {
            index,
            label,
            duration_s: trace.duration.as_secs_f64(),
            space_reduction_ratio: trace.space_reduction_ratio,
            initial_loss: trace.initial_loss(),
            final_loss: trace.final_loss,
        });
        images.push(img);
    }
    let snap = snapshot(&cfg.to_text());
    write_csv(&out.join("trace.csv"), &snap, TRACE_HEADER, &rows)?;
    std::fs::create_dir_all(out).map_err(|e| crate::error::io_error(out, e))?;
    write_idx(
        &ds.with_images(images),
        &out.join("train-images-idx3-ubyte"),
        &out.join("train-labels-idx1-ubyte"),
    )?;
    write_record(out, &snap, &[("topologize", total)])
}
