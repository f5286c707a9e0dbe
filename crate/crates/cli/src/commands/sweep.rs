use std::path::Path;

use serde::Serialize;
use topolayer_nn::train::EvalSchedule;

use crate::commands::train::{fit, prepare};
use crate::config::{ExperimentConfig, LossChoice};
use crate::error::CliError;
use crate::output::{snapshot, write_csv};

#[derive(Serialize)]
struct SweepRow {
    w0: i64,
    w1: i64,
    final_accuracy: f64,
}

pub const SWEEP_HEADER: &[&str] = &["w0", "w1", "final_accuracy"];

/// One weighted-loss topologization and training run per integer pair in
/// `w0 x w1`, w1 varying fastest. Accuracy is measured after the last epoch
/// only.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    for (name, r) in [("w0", &cfg.w0), ("w1", &cfg.w1)] {
        if r.is_empty() {
            return Err(CliError::Config(format!("{name} range {}:{} is empty", r.start(), r.end())));
        }
    }
    let (train_ds, test_ds) = prepare(cfg)?;
    let mut train_cfg = cfg.train();
    train_cfg.eval = EvalSchedule::FinalOnly;
    let mut rows = Vec::new();
    for w0 in cfg.w0.clone() {
        for w1 in cfg.w1.clone() {
            let cell = ExperimentConfig {
                loss: LossChoice::Weighted,
                weights: vec![w0 as f64, w1 as f64],
                ..cfg.clone()
            };
            let (_, metrics, elapsed) = fit(&cell, &train_cfg, &train_ds, &test_ds)?;
            let final_accuracy = metrics.last().and_then(|m| m.test_accuracy).expect("final epoch is evaluated");
            log::info!("cell ({w0}, {w1}): accuracy {final_accuracy} in {elapsed:.2?}");
            rows.push(SweepRow { w0, w1, final_accuracy });
        }
    }
    let snap = snapshot(&ExperimentConfig {
        loss: LossChoice::Weighted,
        ..cfg.clone()
    }
    .to_text());
    write_csv(out, &snap, SWEEP_HEADER, &rows)
}
