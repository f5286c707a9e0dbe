use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use topolayer::batch::binarize_images;
use topolayer::Dataset;
use topolayer_nn::train::{train, EpochMetrics};
use topolayer_nn::{checkpoint, ClassifierModel, TrainConfig};

use crate::config::ExperimentConfig;
use crate::data::{test_set, train_subset};
use crate::error::CliError;
use crate::output::{snapshot, write_csv, write_record};

#[derive(Serialize)]
struct MetricsRow {
    epoch: usize,
    train_loss: f64,
    test_accuracy: Option<f64>,
}

pub const METRICS_HEADER: &[&str] = &["epoch", "train_loss", "test_accuracy"];

/// Training and test sets as the classifier sees them, before any
/// topologization.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset), CliError> {
    let (mut train_ds, mut test_ds) = (train_subset(cfg)?, test_set(cfg)?);
    if cfg.binarize {
        train_ds = train_ds.with_images(binarize_images(train_ds.images(), cfg.threshold));
        test_ds = test_ds.with_images(binarize_images(test_ds.images(), cfg.threshold));
    }
    Ok((train_ds, test_ds))
}

/// Trains a fresh model seeded with `cfg.seed`.
pub fn fit(
    cfg: &ExperimentConfig,
    train_cfg: &TrainConfig,
    train_ds: &Dataset,
    test_ds: &Dataset,
) -> Result<(ClassifierModel, Vec<EpochMetrics>, Duration), CliError> {
    let mut model = ClassifierModel::new(cfg.seed);
    let start = Instant::now();
    let metrics = train(&mut model, train_ds, test_ds, train_cfg, cfg.preprocess().as_ref())?;
    Ok((model, metrics, start.elapsed()))
}

/// Writes `metrics.csv`, `model.ckpt` and `record.txt` into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let (train_ds, test_ds) = prepare(cfg)?;
    let (model, metrics, elapsed) = fit(cfg, &cfg.train(), &train_ds, &test_ds)?;
    let rows: Vec<_> = metrics
        .iter()
        .map(|m| MetricsRow {
            epoch: m.epoch,
            train_loss: m.train_loss,
            test_accuracy: m.test_accuracy,
        })
        .collect();
    let snap = snapshot(&cfg.to_text());
    write_csv(&out.join("metrics.csv"), &snap, METRICS_HEADER, &rows)?;
    checkpoint::save(&model, &out.join("model.ckpt"))?;
    write_record(out, &snap, &[("train", elapsed)])
}
