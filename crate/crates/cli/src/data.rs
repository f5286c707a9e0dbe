//! Dataset lookup under the data root.

use std::path::{Path, PathBuf};

use topolayer::dataset::{idx_paths, load_idx, subset, Split};
use topolayer::Dataset;

use crate::config::{ExperimentConfig, DATA_DIR_ENV};
use crate::error::CliError;

pub fn data_root(cfg: &ExperimentConfig) -> PathBuf {
    cfg.data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn fetch_hint(dataset: &str, dir: &Path) -> String {
    format!(
        "place the four IDX files for {dataset} (train-images-idx3-ubyte, train-labels-idx1-ubyte, \
         t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte, optionally gzipped) in {}; \
         set {DATA_DIR_ENV} or --data-dir to use another root. The files come from the dataset's \
         official distribution; scripts/build_mnist_sample.py assembles an MNIST sample offline.",
        dir.display()
    )
}

pub fn load_split(cfg: &ExperimentConfig, split: Split) -> Result<Dataset, CliError> {
    let dir = data_root(cfg).join(cfg.dataset.as_str());
    let (images, labels) = idx_paths(&dir, split);
    for p in [&images, &labels] {
        if !p.exists() {
            return Err(CliError::Data(format!("missing {}: {}", p.display(), fetch_hint(cfg.dataset.as_str(), &dir))));
        }
    }
    Ok(load_idx(&images, &labels)?)
}

/// The seeded training subset of `cfg.subset` images.
pub fn train_subset(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    Ok(subset(&load_split(cfg, Split::Train)?, cfg.subset, cfg.seed)?)
}

/// The test split, or a seeded subset of it when `test_subset > 0`.
pub fn test_set(cfg: &ExperimentConfig) -> Result<Dataset, CliError> {
    let full = load_split(cfg, Split::Test)?;
    if cfg.test_subset == 0 {
        Ok(full)
    } else {
        Ok(subset(&full, cfg.test_subset, cfg.seed)?)
    }
}
