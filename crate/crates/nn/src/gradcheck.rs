//! Central-difference checks of the analytic parameter gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ClassifierModel, Mode, PARAM_NAMES};
use crate::tensor::Tensor;
use crate::NnError;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub tensor: &'static str,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl ParamCheck {
    /// `|a - n| / max(|a|, |n|, floor)`.
    pub fn relative_error(&self, floor: f64) -> f64 {
        let scale = self.analytic.abs().max(self.numeric.abs()).max(floor);
        (self.analytic - self.numeric).abs() / scale
    }
}

/// Compares `samples` randomly chosen entries of every parameter tensor
/// against `(L(θ+h) - L(θ-h)) / 2h`. Runs in double precision; dropout masks
/// are fixed by `mode`, so train mode is checked as well.
pub fn check_gradients(
    model: &ClassifierModel<f64>,
    batch: &Tensor<f64>,
    labels: &[u8],
    mode: Mode,
    samples: usize,
    h: f64,
    seed: u64,
) -> Result<Vec<ParamCheck>, NnError> {
    let mut work = model.clone();
    work.zero_grad();
    work.loss_and_backward(batch, labels, mode)?;
    let grads: Vec<Vec<f64>> = work.parameters().iter().map(|p| p.grad().unwrap().to_vec()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples * grads.len());
    for (t, name) in PARAM_NAMES.iter().enumerate() {
        let len = grads[t].len();
        for _ in 0..samples {
            let index = rng.random_range(0..len);
            let original = work.parameters()[t].data()[index];
            let mut probe = |v: f64| {
                work.parameters_mut()[t].data_mut()[index] = v;
                work.loss(batch, labels, mode)
            };
            let plus = probe(original + h)?;
            let minus = probe(original - h)?;
            probe(original)?;
            out.push(ParamCheck {
                tensor: name,
                index,
                analytic: grads[t][index],
                numeric: (plus - minus) / (2.0 * h),
            });
        }
    }
    Ok(out)
}
