use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topolayer::batch::topologize_images_parallel;
use topolayer::{Dataset, Image, TopologizeConfig};

use crate::adam::{Adam, AdamConfig};
use crate::model::{ClassifierModel, DropoutKey, Mode, CLASSES, INPUT_SIDE};
use crate::real::Real;
use crate::tensor::Tensor;
use crate::NnError;

const EVAL_BATCH: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSchedule {
    EveryEpoch,
    /// Only after the last epoch; cheaper for sweeps.
    FinalOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Drives weight init, shuffling and dropout.
    pub seed: u64,
    pub eval: EvalSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            epochs: 9,
            adam: AdamConfig::default(),
            seed: 0,
            eval: EvalSchedule::EveryEpoch,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let a = &self.adam;
        let ok = self.batch_size > 0
            && self.epochs > 0
            && a.lr > 0.0
            && (0.0..1.0).contains(&a.beta1)
            && (0.0..1.0).contains(&a.beta2)
            && a.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(NnError::Config(format!("{self:?}")))
        }
    }
}

/// Topologization applied once to every training image before epoch 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocess {
    pub topologize: TopologizeConfig,
    pub threshold: f32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Mean NLL over the epoch's training images.
    pub train_loss: f64,
    pub test_accuracy: Option<f64>,
}

/// Stacks images into a `[B, 1, 28, 28]` batch.
pub fn images_to_tensor<T: Real>(images: &[&Image]) -> Result<Tensor<T>, NnError> {
    let side = INPUT_SIDE;
    let mut data = Vec::with_capacity(images.len() * side * side);
    for img in images {
        let f = img.frame();
        if (f.width(), f.height()) != (side, side) {
            return Err(NnError::Shape {
                layer: "input",
                expected: vec![side, side],
                got: vec![f.height(), f.width()],
            });
        }
        data.extend(img.pixels().iter().map(|&v| T::from_f64(v as f64)));
    }
    Tensor::new(&[images.len(), 1, side, side], data)
}

/// Topologizes every image of `ds`, keeping labels.
pub fn preprocess_dataset(ds: &Dataset, pre: &Preprocess) -> Result<Dataset, NnError> {
    pre.topologize.validate().map_err(|e| NnError::Config(e.to_string()))?;
    let start = Instant::now();
    let mut images = Vec::with_capacity(ds.len());
    for r in topologize_images_parallel(ds.images(), &pre.topologize, pre.threshold) {
        images.push(r?.0);
    }
    log::info!("topologized {} images in {:.2?}", ds.len(), start.elapsed());
    Ok(ds.with_images(images))
}

/// Trains `model` in place and reports one record per epoch.
pub fn train(
    model: &mut ClassifierModel<f32>,
    train_ds: &Dataset,
    test_ds: &Dataset,
    cfg: &TrainConfig,
    preprocess: Option<&Preprocess>,
) -> Result<Vec<EpochMetrics>, NnError> {
    cfg.validate()?;
    if train_ds.is_empty() {
        return Err(NnError::EmptyDataset(train_ds.name.clone()));
    }
    let prepared;
    let train_ds = match preprocess {
        Some(pre) => {
            prepared = preprocess_dataset(train_ds, pre)?;
            &prepared
        }
        None => train_ds,
    };

    let mut adam = Adam::new(model, cfg.adam);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut metrics = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let imgs: Vec<&Image> = idx.iter().map(|&i| &train_ds.images()[i]).collect();
            let labels: Vec<u8> = idx.iter().map(|&i| train_ds.labels()[i]).collect();
            let x = images_to_tensor(&imgs)?;
            let key = DropoutKey {
                seed: cfg.seed,
                epoch: epoch as u64,
                batch: b as u64,
            };
            model.zero_grad();
            let loss = model.loss_and_backward(&x, &labels, Mode::Train(key))?;
            adam.step(model);
            total += loss as f64 * idx.len() as f64;
        }
        let last = epoch + 1 == cfg.epochs;
        let test_accuracy = match cfg.eval {
            EvalSchedule::EveryEpoch => Some(evaluate(model, test_ds)?),
            EvalSchedule::FinalOnly if last => Some(evaluate(model, test_ds)?),
            EvalSchedule::FinalOnly => None,
        };
        let m = EpochMetrics {
            epoch: epoch + 1,
            train_loss: total / train_ds.len() as f64,
            test_accuracy,
        };
        log::info!("epoch {}: loss {:.4} accuracy {:?}", m.epoch, m.train_loss, m.test_accuracy);
        metrics.push(m);
    }
    Ok(metrics)
}

/// Fraction of argmax predictions equal to the label; 0 for an empty set.
pub fn evaluate<T: Real>(model: &ClassifierModel<T>, test_ds: &Dataset) -> Result<f64, NnError> {
    if test_ds.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    let all: Vec<&Image> = test_ds.images().iter().collect();
    for (imgs, labels) in all.chunks(EVAL_BATCH).zip(test_ds.labels().chunks(EVAL_BATCH)) {
        let out = model.forward(&images_to_tensor(imgs)?, Mode::Eval)?;
        for (row, &l) in out.data().chunks(CLASSES).zip(labels) {
            let mut best = 0;
            for k in 1..CLASSES {
                if row[k] > row[best] {
                    best = k;
                }
            }
            correct += (best == l as usize) as usize;
        }
    }
    Ok(correct as f64 / test_ds.len() as f64)
}
