//! Experiment settings: defaults, a flat `key = value` file, then flag
//! overrides, in that order.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use topolayer::signature::{LossSpec, Sign};
use topolayer::TopologizeConfig;
use topolayer_nn::train::{EvalSchedule, Preprocess};
use topolayer_nn::{AdamConfig, TrainConfig};

use crate::error::CliError;

pub const DATA_DIR_ENV: &str = "TOPOLAYER_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetName {
    Mnist,
    Kmnist,
    FashionMnist,
}

impl DatasetName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Mnist => "mnist",
            Self::Kmnist => "kmnist",
            Self::FashionMnist => "fashion-mnist",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "mnist" => Some(Self::Mnist),
            "kmnist" => Some(Self::Kmnist),
            "fashion-mnist" => Some(Self::FashionMnist),
            _ => None,
        }
    }
}

/// Which topological loss, if any, preprocesses the training images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossChoice {
    /// No topologization.
    Baseline,
    Nonparametric,
    Parametrized,
    Weighted,
}

impl LossChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Nonparametric => "nonparametric",
            Self::Parametrized => "parametrized",
            Self::Weighted => "weighted",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "baseline" => Some(Self::Baseline),
            "nonparametric" => Some(Self::Nonparametric),
            "parametrized" => Some(Self::Parametrized),
            "weighted" => Some(Self::Weighted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Root holding one directory per dataset; unset means the environment
    /// variable, then `data`.
    pub data_dir: Option<PathBuf>,
    pub dataset: DatasetName,
    pub subset: usize,
    /// Test images used for accuracy; 0 means the whole test file.
    pub test_subset: usize,
    pub seed: u64,
    pub threshold: f32,
    /// Binarize training and test images before training, so baseline and
    /// topologized runs see the same kind of input.
    pub binarize: bool,

    pub loss: LossChoice,
    pub max_dim: usize,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub weights: Vec<f64>,
    pub sign: Sign,
    pub steps: usize,
    pub lr: f64,
    pub clamp: bool,

    pub epochs: usize,
    pub batch_size: usize,
    pub train_lr: f64,

    pub w0: RangeInclusive<i64>,
    pub w1: RangeInclusive<i64>,
    pub repetitions: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let topo = TopologizeConfig::default();
        let train = TrainConfig::default();
        Self {
            data_dir: None,
            dataset: DatasetName::Mnist,
            subset: 400,
            test_subset: 0,
            seed: 0,
            threshold: 0.5,
            binarize: true,
            loss: LossChoice::Nonparametric,
            max_dim: 1,
            dim: 1,
            p: 1.0,
            q: 1.0,
            weights: vec![-1.0, 8.0],
            sign: Sign::Promote,
            steps: topo.steps,
            lr: topo.learning_rate,
            clamp: topo.clamp,
            epochs: train.epochs,
            batch_size: train.batch_size,
            train_lr: train.adam.lr,
            w0: -8..=8,
            w1: -8..=8,
            repetitions: 64,
        }
    }
}

pub const KEYS: &[&str] = &[
    "data_dir", "dataset", "subset", "test_subset", "seed", "threshold", "binarize", "loss", "max_dim", "dim", "p", "q", "weights", "sign", "steps",
    "lr", "clamp", "epochs", "batch_size", "train_lr", "w0", "w1", "repetitions",
];

fn bad(key: &str, value: &str) -> CliError {
    CliError::Config(format!("invalid value {value:?} for {key}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

/// `lo:hi` (inclusive) or a single integer.
fn parse_range(key: &str, value: &str) -> Result<RangeInclusive<i64>, CliError> {
    let (lo, hi) = match value.split_once(':') {
        Some((a, b)) => (num(key, a.trim())?, num(key, b.trim())?),
        None => {
            let v = num(key, value)?;
            (v, v)
        }
    };
    Ok(lo..=hi)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "data_dir" => self.data_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "dataset" => self.dataset = DatasetName::parse(v).ok_or_else(|| bad(key, v))?,
            "subset" => self.subset = num(key, v)?,
            "test_subset" => self.test_subset = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "threshold" => self.threshold = num(key, v)?,
            "binarize" => self.binarize = parse_bool(key, v)?,
            "loss" | "preset" => self.loss = LossChoice::parse(v).ok_or_else(|| bad(key, v))?,
            "max_dim" => self.max_dim = num(key, v)?,
            "dim" => self.dim = num(key, v)?,
            "p" => self.p = num(key, v)?,
            "q" => self.q = num(key, v)?,
            "weights" => {
                self.weights = v.split(',').map(|w| num(key, w.trim())).collect::<Result<_, _>>()?;
            }
            "sign" => {
                self.sign = match v {
                    "promote" => Sign::Promote,
                    "discount" => Sign::Discount,
                    _ => return Err(bad(key, v)),
                }
            }
            "steps" => self.steps = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "clamp" => self.clamp = parse_bool(key, v)?,
            "epochs" => self.epochs = num(key, v)?,
            "batch_size" => self.batch_size = num(key, v)?,
            "train_lr" => self.train_lr = num(key, v)?,
            "w0" => self.w0 = parse_range(key, v)?,
            "w1" => self.w1 = parse_range(key, v)?,
            "repetitions" => self.repetitions = num(key, v)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let range = |r: &RangeInclusive<i64>| format!("{}:{}", r.start(), r.end());
        match key {
            "data_dir" => self.data_dir.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            "dataset" => self.dataset.as_str().into(),
            "subset" => self.subset.to_string(),
            "test_subset" => self.test_subset.to_string(),
            "seed" => self.seed.to_string(),
            "threshold" => self.threshold.to_string(),
            "binarize" => self.binarize.to_string(),
            "loss" => self.loss.as_str().into(),
            "max_dim" => self.max_dim.to_string(),
            "dim" => self.dim.to_string(),
            "p" => self.p.to_string(),
            "q" => self.q.to_string(),
            "weights" => self.weights.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(","),
            "sign" => match self.sign {
                Sign::Promote => "promote".into(),
                Sign::Discount => "discount".into(),
            },
            "steps" => self.steps.to_string(),
            "lr" => self.lr.to_string(),
            "clamp" => self.clamp.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "train_lr" => self.train_lr.to_string(),
            "w0" => range(&self.w0),
            "w1" => range(&self.w1),
            "repetitions" => self.repetitions.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    /// Every key, one `key = value` line each; [`apply_text`](Self::apply_text)
    /// reads it back unchanged. Floats print in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            writeln!(out, "{k} = {}", self.get(k)).unwrap();
        }
        out
    }

    pub fn spec(&self) -> Option<LossSpec> {
        let spec = match self.loss {
            LossChoice::Baseline => return None,
            LossChoice::Nonparametric => LossSpec::nonparametric(self.max_dim),
            LossChoice::Parametrized => LossSpec::parametrized(self.dim, self.p, self.q),
            LossChoice::Weighted => LossSpec::weighted(self.weights.clone()),
        };
        Some(spec.with_sign(self.sign))
    }

    /// Topologization settings for the configured loss; the default loss
    /// when the configuration is a baseline.
    pub fn topologize(&self) -> TopologizeConfig {
        TopologizeConfig {
            spec: self.spec().unwrap_or_default(),
            steps: self.steps,
            learning_rate: self.lr,
            clamp: self.clamp,
        }
    }

    pub fn preprocess(&self) -> Option<Preprocess> {
        self.spec().map(|_| Preprocess {
            topologize: self.topologize(),
            threshold: self.threshold,
        })
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam: AdamConfig {
                lr: self.train_lr,
                ..AdamConfig::default()
            },
            seed: self.seed,
            eval: EvalSchedule::EveryEpoch,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return fail(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.subset == 0 {
            return fail("subset must be at least 1".into());
        }
        self.topologize().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.train().validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_lossless() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text("# sweep\nloss = weighted\nweights = -1.5, 8\nlr=0.1\nw0 = -2:3\nw1 = 4\nsign = discount\nthreshold = 0.3\n")
            .unwrap();
        assert_eq!(cfg.w1, 4..=4);
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(matches!(cfg.set("nope", "1"), Err(CliError::Config(_))));
        assert!(cfg.set("dataset", "cifar").is_err());
        assert!(cfg.set("clamp", "maybe").is_err());
        assert!(cfg.apply_text("subset 4").is_err());
        cfg.set("threshold", "1.5").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_map_to_specs() {
        let mut cfg = ExperimentConfig::default();
        cfg.set("preset", "baseline").unwrap();
        assert!(cfg.spec().is_none() && cfg.preprocess().is_none());
        cfg.set("preset", "parametrized").unwrap();
        assert_eq!(cfg.spec(), Some(LossSpec::parametrized(1, 1.0, 1.0)));
        for name in ["mnist", "kmnist", "fashion-mnist"] {
            cfg.set("dataset", name).unwrap();
            assert_eq!(cfg.get("dataset"), name);
        }
    }
}
