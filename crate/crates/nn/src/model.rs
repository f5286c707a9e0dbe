//! The two-convolution MNIST classifier with hand-written backprop.
//!
//! ```text
//! [B,1,28,28] conv3x3(32) relu conv3x3(64) relu maxpool2 dropout(.25)
//!   flatten(9216) linear(128) relu dropout(.5) linear(10) log_softmax
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ops::{conv_forward, col2im, im2col, log_softmax, maxpool2, maxpool2_backward, relu_backward, relu_in_place};
use crate::real::Real;
use crate::tensor::Tensor;
use crate::NnError;

pub const INPUT_SIDE: usize = 28;
pub const CLASSES: usize = 10;
pub const FLAT: usize = C2 * POOLED * POOLED;
pub const HIDDEN: usize = 128;
pub const DROPOUT_CONV: f64 = 0.25;
pub const DROPOUT_FC: f64 = 0.5;

const K: usize = 3;
const C1: usize = 32;
const C2: usize = 64;
const S1: usize = INPUT_SIDE - K + 1;
const S2: usize = S1 - K + 1;
const POOLED: usize = S2 / 2;

/// Images per work unit. Fixed, so gradient sums do not depend on the
/// number of threads.
const CHUNK: usize = 10;

/// Identifies one minibatch; every image's dropout masks derive from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropoutKey {
    pub seed: u64,
    pub epoch: u64,
    pub batch: u64,
}

impl DropoutKey {
    fn rng(&self, image: usize) -> ChaCha8Rng {
        let mut h = self.seed;
        for v in [self.epoch, self.batch, image as u64] {
            h = splitmix(h ^ v);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Dropout disabled; forward is deterministic.
    Eval,
    Train(DropoutKey),
}

/// Inverted-dropout mask: `0` or `1/(1-p)`.
fn dropout_mask<T: Real>(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<T> {
    let keep = T::from_f64(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.random::<f64>() < p { T::zero() } else { keep })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel<T: Real = f32> {
    pub conv1_w: Tensor<T>,
    pub conv1_b: Tensor<T>,
    pub conv2_w: Tensor<T>,
    pub conv2_b: Tensor<T>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
    pub fc2_w: Tensor<T>,
    pub fc2_b: Tensor<T>,
}

pub const PARAM_NAMES: [&str; 8] = ["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "fc1.weight", "fc1.bias", "fc2.weight", "fc2.bias"];

/// Saved activations of one image's convolutional stack.
struct ConvCache<T> {
    cols1: Vec<T>,
    a1: Vec<T>,
    cols2: Vec<T>,
    a2: Vec<T>,
    pool_arg: Vec<u32>,
    mask: Option<Vec<T>>,
}

/// Everything `backward` needs from a training forward pass.
struct Cache<T> {
    convs: Vec<ConvCache<T>>,
    flat: Vec<T>,
    a3: Vec<T>,
    mask3: Option<Vec<T>>,
    hidden: Vec<T>,
    log_probs: Vec<T>,
}

type ConvGrads<T> = [Vec<T>; 4];

impl<T: Real> ClassifierModel<T> {
    /// Uniform `±1/sqrt(fan_in)` init for every weight and bias, drawn in
    /// declaration order from `seed`.
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut init = |shape: &[usize], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let n = shape.iter().product();
            let data = (0..n).map(|_| T::from_f64(rng.random_range(-bound..bound))).collect();
            Tensor::new(shape, data).expect("shape matches")
        };
        Self {
            conv1_w: init(&[C1, 1, K, K], K * K),
            conv1_b: init(&[C1], K * K),
            conv2_w: init(&[C2, C1, K, K], C1 * K * K),
            conv2_b: init(&[C2], C1 * K * K),
            fc1_w: init(&[HIDDEN, FLAT], FLAT),
            fc1_b: init(&[HIDDEN], FLAT),
            fc2_w: init(&[CLASSES, HIDDEN], HIDDEN),
            fc2_b: init(&[CLASSES], HIDDEN),
        }
    }

    /// Parameters in declaration order (see [`PARAM_NAMES`]).
    pub fn parameters(&self) -> [&Tensor<T>; 8] {
        [&self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b, &self.fc1_w, &self.fc1_b, &self.fc2_w, &self.fc2_b]
    }

    pub fn parameters_mut(&mut self) -> [&mut Tensor<T>; 8] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Same weights at another precision.
    pub fn cast<U: Real>(&self) -> ClassifierModel<U> {
        let conv = |t: &Tensor<T>| {
            let data = t.data().iter().map(|v| U::from_f64(v.to_f64().unwrap())).collect();
            Tensor::new(t.shape(), data).expect("same shape")
        };
        ClassifierModel {
            conv1_w: conv(&self.conv1_w),
            conv1_b: conv(&self.conv1_b),
            conv2_w: conv(&self.conv2_w),
            conv2_b: conv(&self.conv2_b),
            fc1_w: conv(&self.fc1_w),
            fc1_b: conv(&self.fc1_b),
            fc2_w: conv(&self.fc2_w),
            fc2_b: conv(&self.fc2_b),
        }
    }

    /// Log-probabilities `[B, 10]` for a `[B, 1, 28, 28]` batch.
    pub fn forward(&self, batch: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, NnError> {
        let b = check_batch(batch)?;
        let cache = self.forward_cached(batch, mode, false);
        Tensor::new(&[b, CLASSES], cache.log_probs)
    }

    /// Mean negative log-likelihood of `labels`, accumulating parameter
    /// gradients into each tensor's grad buffer.
    pub fn loss_and_backward(&mut self, batch: &Tensor<T>, labels: &[u8], mode: Mode) -> Result<T, NnError> {
        let b = check_batch(batch)?;
        check_labels(labels, b)?;
        let cache = self.forward_cached(batch, mode, true);
        let loss = nll(&cache.log_probs, labels);
        self.backward(batch, labels, &cache);
        Ok(loss)
    }

    /// Mean negative log-likelihood without touching gradients.
    pub fn loss(&self, batch: &Tensor<T>, labels: &[u8], mode: Mode) -> Result<T, NnError> {
        let b = check_batch(batch)?;
        check_labels(labels, b)?;
        Ok(nll(&self.forward_cached(batch, mode, false).log_probs, labels))
    }

    fn conv_stack(&self, image: &[T], mask: Option<Vec<T>>, keep: bool) -> (Vec<T>, Option<ConvCache<T>>) {
        let cols1 = im2col(image, 1, INPUT_SIDE, INPUT_SIDE, K);
        let mut a1 = conv_forward(self.conv1_w.data(), self.conv1_b.data(), &cols1, K * K, S1 * S1);
        relu_in_place(&mut a1);
        let cols2 = im2col(&a1, C1, S1, S1, K);
        let mut a2 = conv_forward(self.conv2_w.data(), self.conv2_b.data(), &cols2, C1 * K * K, S2 * S2);
        relu_in_place(&mut a2);
        let (mut pooled, pool_arg) = maxpool2(&a2, C2, S2, S2);
        if let Some(m) = &mask {
            for (v, &k) in pooled.iter_mut().zip(m) {
                *v *= k;
            }
        }
        let cache = keep.then_some(ConvCache { cols1, a1, cols2, a2, pool_arg, mask });
        (pooled, cache)
    }

    fn forward_cached(&self, batch: &Tensor<T>, mode: Mode, keep: bool) -> Cache<T> {
        let b = batch.shape()[0];
        let masks = |i: usize| match mode {
            Mode::Eval => (None, None),
            Mode::Train(key) => {
                let mut rng = key.rng(i);
                let m1 = dropout_mask(&mut rng, FLAT, DROPOUT_CONV);
                let m3 = dropout_mask(&mut rng, HIDDEN, DROPOUT_FC);
                (Some(m1), Some(m3))
            }
        };
        let indices: Vec<usize> = (0..b).collect();
        let per_chunk = map_chunks(&indices, |chunk| {
            chunk
                .iter()
                .map(|&i| {
                    let (m1, m3) = masks(i);
                    let (flat, cache) = self.conv_stack(batch.row(i), m1, keep);
                    (flat, cache, m3)
                })
                .collect::<Vec<_>>()
        });

        let mut flat = Vec::with_capacity(b * FLAT);
        let mut convs = Vec::with_capacity(if keep { b } else { 0 });
        let mut mask3 = match mode {
            Mode::Eval => None,
            Mode::Train(_) => Some(Vec::with_capacity(b * HIDDEN)),
        };
        for (f, c, m3) in per_chunk.into_iter().flatten() {
            flat.extend_from_slice(&f);
            convs.extend(c);
            if let (Some(all), Some(m)) = (&mut mask3, m3) {
                all.extend_from_slice(&m);
            }
        }

        let mut a3 = broadcast_rows(self.fc1_b.data(), b);
        T::gemm(b, FLAT, HIDDEN, T::one(), &flat, false, self.fc1_w.data(), true, T::one(), &mut a3);
        relu_in_place(&mut a3);
        let mut hidden = a3.clone();
        if let Some(m) = &mask3 {
            for (v, &k) in hidden.iter_mut().zip(m) {
                *v *= k;
            }
        }
        let mut logits = broadcast_rows(self.fc2_b.data(), b);
        T::gemm(b, HIDDEN, CLASSES, T::one(), &hidden, false, self.fc2_w.data(), true, T::one(), &mut logits);
        Cache {
            convs,
            flat,
            a3,
            mask3,
            hidden,
            log_probs: log_softmax(&logits, CLASSES),
        }
    }

    fn backward(&mut self, batch: &Tensor<T>, labels: &[u8], cache: &Cache<T>) {
        let b = batch.shape()[0];
        let scale = T::one() / T::from_f64(b as f64);
        let mut dz4: Vec<T> = cache.log_probs.iter().map(|v| v.exp() * scale).collect();
        for (row, &l) in dz4.chunks_mut(CLASSES).zip(labels) {
            row[l as usize] -= scale;
        }

        T::gemm(CLASSES, b, HIDDEN, T::one(), &dz4, true, &cache.hidden, false, T::one(), self.fc2_w.grad_mut());
        add_column_sums(self.fc2_b.grad_mut(), &dz4, CLASSES);
        let mut dz3 = vec![T::zero(); b * HIDDEN];
        T::gemm(b, CLASSES, HIDDEN, T::one(), &dz4, false, self.fc2_w.data(), false, T::zero(), &mut dz3);
        if let Some(m) = &cache.mask3 {
            for (g, &k) in dz3.iter_mut().zip(m) {
                *g *= k;
            }
        }
        relu_backward(&mut dz3, &cache.a3);

        T::gemm(HIDDEN, b, FLAT, T::one(), &dz3, true, &cache.flat, false, T::one(), self.fc1_w.grad_mut());
        add_column_sums(self.fc1_b.grad_mut(), &dz3, HIDDEN);
        let mut dflat = vec![T::zero(); b * FLAT];
        T::gemm(b, HIDDEN, FLAT, T::one(), &dz3, false, self.fc1_w.data(), false, T::zero(), &mut dflat);

        let indices: Vec<usize> = (0..b).collect();
        let per_chunk = map_chunks(&indices, |chunk| {
            let mut acc: ConvGrads<T> = [
                vec![T::zero(); self.conv1_w.len()],
                vec![T::zero(); C1],
                vec![T::zero(); self.conv2_w.len()],
                vec![T::zero(); C2],
            ];
            for &i in chunk {
                self.conv_backward(&cache.convs[i], &dflat[i * FLAT..(i + 1) * FLAT], &mut acc);
            }
            acc
        });
        // summed in chunk order, independent of scheduling
        let targets = [&mut self.conv1_w, &mut self.conv1_b, &mut self.conv2_w, &mut self.conv2_b];
        for (t, k) in targets.into_iter().zip(0..) {
            let g = t.grad_mut();
            for chunk in &per_chunk {
                for (a, &v) in g.iter_mut().zip(&chunk[k]) {
                    *a += v;
                }
            }
        }
    }

    fn conv_backward(&self, c: &ConvCache<T>, dpool: &[T], acc: &mut ConvGrads<T>) {
        let mut dpool = dpool.to_vec();
        if let Some(m) = &c.mask {
            for (g, &k) in dpool.iter_mut().zip(m) {
                *g *= k;
            }
        }
        let mut dz2 = maxpool2_backward(&dpool, &c.pool_arg, C2 * S2 * S2);
        relu_backward(&mut dz2, &c.a2);
        let hw2 = S2 * S2;
        T::gemm(C2, hw2, C1 * K * K, T::one(), &dz2, false, &c.cols2, true, T::one(), &mut acc[2]);
        add_row_sums(&mut acc[3], &dz2, hw2);
        let mut dcols2 = vec![T::zero(); C1 * K * K * hw2];
        T::gemm(C1 * K * K, C2, hw2, T::one(), self.conv2_w.data(), true, &dz2, false, T::zero(), &mut dcols2);
        let mut dz1 = col2im(&dcols2, C1, S1, S1, K);
        relu_backward(&mut dz1, &c.a1);
        let hw1 = S1 * S1;
        T::gemm(C1, hw1, K * K, T::one(), &dz1, false, &c.cols1, true, T::one(), &mut acc[0]);
        add_row_sums(&mut acc[1], &dz1, hw1);
    }
}

fn check_batch<T: Real>(batch: &Tensor<T>) -> Result<usize, NnError> {
    match batch.shape() {
        [b, 1, INPUT_SIDE, INPUT_SIDE] => Ok(*b),
        other => Err(NnError::Shape {
            layer: "conv1",
            expected: vec![0, 1, INPUT_SIDE, INPUT_SIDE],
            got: other.to_vec(),
        }),
    }
}

fn check_labels(labels: &[u8], b: usize) -> Result<(), NnError> {
    if labels.len() != b {
        return Err(NnError::Shape {
            layer: "nll",
            expected: vec![b],
            got: vec![labels.len()],
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l as usize >= CLASSES) {
        return Err(NnError::Label(l));
    }
    Ok(())
}

fn nll<T: Real>(log_probs: &[T], labels: &[u8]) -> T {
    let total: T = log_probs.chunks(CLASSES).zip(labels).map(|(row, &l)| -row[l as usize]).sum();
    total / T::from_f64(labels.len() as f64)
}

fn broadcast_rows<T: Real>(bias: &[T], rows: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(rows * bias.len());
    for _ in 0..rows {
        out.extend_from_slice(bias);
    }
    out
}

fn add_column_sums<T: Real>(acc: &mut [T], m: &[T], cols: usize) {
    for row in m.chunks(cols) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
}

fn add_row_sums<T: Real>(acc: &mut [T], m: &[T], cols: usize) {
    for (a, row) in acc.iter_mut().zip(m.chunks(cols)) {
        *a += row.iter().copied().sum::<T>();
    }
}

#[cfg(feature = "parallel")]
fn map_chunks<I: Sync, R: Send>(items: &[I], f: impl Fn(&[I]) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_chunks(CHUNK).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_chunks<I: Sync, R: Send>(items: &[I], f: impl Fn(&[I]) -> R + Sync + Send) -> Vec<R> {
    items.chunks(CHUNK).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch<T: Real>(b: usize, seed: u64) -> Tensor<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..b * INPUT_SIDE * INPUT_SIDE).map(|_| T::from_f64(rng.random::<f64>())).collect();
        Tensor::new(&[b, 1, INPUT_SIDE, INPUT_SIDE], data).unwrap()
    }

    #[test]
    fn layer_sizes() {
        assert_eq!(FLAT, 9216);
        let m = ClassifierModel::<f32>::new(0);
        assert_eq!(m.parameter_count(), 320 + 18_496 + 1_179_776 + 1_290);
    }

    #[test]
    fn init_respects_fan_in_bounds() {
        let m = ClassifierModel::<f64>::new(3);
        let fans = [9, 9, 288, 288, 9216, 9216, 128, 128];
        for (p, fan) in m.parameters().iter().zip(fans) {
            let bound = 1.0 / (fan as f64).sqrt();
            assert!(p.data().iter().all(|v| v.abs() <= bound));
        }
        assert_eq!(ClassifierModel::<f64>::new(3), m);
        assert_ne!(ClassifierModel::<f64>::new(4), m);
    }

    #[test]
    fn rows_are_normalized() {
        let m = ClassifierModel::<f32>::new(1);
        let out = m.forward(&batch(3, 9), Mode::Eval).unwrap();
        for row in out.data().chunks(CLASSES) {
            let total: f32 = row.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_batch_follows_the_bias_path() {
        let m = ClassifierModel::<f64>::new(2);
        let zeros = Tensor::zeros(&[2, 1, INPUT_SIDE, INPUT_SIDE]);
        let out = m.forward(&zeros, Mode::Eval).unwrap();
        // every activation is a function of biases alone
        let relu = |v: f64| v.max(0.0);
        let a1: Vec<f64> = m.conv1_b.data().iter().map(|&v| relu(v)).collect();
        let a2: Vec<f64> = (0..C2)
            .map(|o| {
                let w = &m.conv2_w.data()[o * C1 * 9..(o + 1) * C1 * 9];
                let s: f64 = (0..C1).map(|c| a1[c] * w[c * 9..(c + 1) * 9].iter().sum::<f64>()).sum();
                relu(s + m.conv2_b.data()[o])
            })
            .collect();
        let flat: Vec<f64> = (0..FLAT).map(|i| a2[i / (POOLED * POOLED)]).collect();
        let h: Vec<f64> = (0..HIDDEN)
            .map(|j| relu(m.fc1_b.data()[j] + (0..FLAT).map(|i| m.fc1_w.data()[j * FLAT + i] * flat[i]).sum::<f64>()))
            .collect();
        let logits: Vec<f64> = (0..CLASSES)
            .map(|k| m.fc2_b.data()[k] + (0..HIDDEN).map(|j| m.fc2_w.data()[k * HIDDEN + j] * h[j]).sum::<f64>())
            .collect();
        let want = log_softmax(&logits, CLASSES);
        for row in out.data().chunks(CLASSES) {
            for (a, b) in row.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_is_deterministic_and_dropout_is_keyed() {
        let m = ClassifierModel::<f32>::new(5);
        let x = batch(4, 1);
        assert_eq!(m.forward(&x, Mode::Eval).unwrap(), m.forward(&x, Mode::Eval).unwrap());
        let key = DropoutKey { seed: 1, epoch: 0, batch: 0 };
        let a = m.forward(&x, Mode::Train(key)).unwrap();
        assert_eq!(a, m.forward(&x, Mode::Train(key)).unwrap());
        assert_ne!(a, m.forward(&x, Mode::Train(DropoutKey { batch: 1, ..key })).unwrap());
        assert_ne!(a, m.forward(&x, Mode::Eval).unwrap());
    }

    #[test]
    fn dropout_mask_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m: Vec<f64> = dropout_mask(&mut rng, 100_000, 0.25);
        let kept = m.iter().filter(|&&v| v > 0.0).count() as f64 / 1e5;
        assert!((kept - 0.75).abs() < 0.01);
        assert!(m.iter().all(|&v| v == 0.0 || (v - 4.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let m = ClassifierModel::<f32>::new(0);
        let bad = Tensor::zeros(&[2, 1, 27, 28]);
        assert!(matches!(m.forward(&bad, Mode::Eval), Err(NnError::Shape { layer: "conv1", .. })));
        let mut m = m;
        let x = batch(2, 0);
        assert!(matches!(m.loss_and_backward(&x, &[1], Mode::Eval), Err(NnError::Shape { layer: "nll", .. })));
        assert!(matches!(m.loss_and_backward(&x, &[1, 10], Mode::Eval), Err(NnError::Label(10))));
    }

    #[test]
    fn loss_matches_forward() {
        let mut m = ClassifierModel::<f64>::new(7);
        let x = batch(3, 2);
        let labels = [3u8, 0, 9];
        let out = m.forward(&x, Mode::Eval).unwrap();
        let want = -(out.data()[3] + out.data()[10] + out.data()[29]) / 3.0;
        let got = m.loss_and_backward(&x, &labels, Mode::Eval).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((m.loss(&x, &labels, Mode::Eval).unwrap() - want).abs() < 1e-12);
        assert!(m.parameters().iter().all(|p| p.grad().is_some()));
    }
}
