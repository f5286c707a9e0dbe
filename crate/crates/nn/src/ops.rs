//! Per-image kernels. Images are channel-major `[c, h, w]` slices.

use crate::real::Real;

/// Unfolds valid `k×k` patches into a `[c·k·k, oh·ow]` matrix whose row
/// order matches a `[out, c, k, k]` weight tensor.
pub fn im2col<T: Real>(input: &[T], c: usize, h: usize, w: usize, k: usize) -> Vec<T> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut cols = vec![T::zero(); c * k * k * oh * ow];
    for ci in 0..c {
        let plane = &input[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let dst = &mut cols[row * oh * ow..(row + 1) * oh * ow];
                for y in 0..oh {
                    let src = &plane[(y + ky) * w + kx..(y + ky) * w + kx + ow];
                    dst[y * ow..(y + 1) * ow].copy_from_slice(src);
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: folds patch gradients back onto the input grid.
pub fn col2im<T: Real>(cols: &[T], c: usize, h: usize, w: usize, k: usize) -> Vec<T> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut out = vec![T::zero(); c * h * w];
    for ci in 0..c {
        let plane = &mut out[ci * h * w..(ci + 1) * h * w];
        for ky in 0..k {
            for kx in 0..k {
                let row = (ci * k + ky) * k + kx;
                let src = &cols[row * oh * ow..(row + 1) * oh * ow];
                for y in 0..oh {
                    let dst = &mut plane[(y + ky) * w + kx..(y + ky) * w + kx + ow];
                    for (d, &s) in dst.iter_mut().zip(&src[y * ow..(y + 1) * ow]) {
                        *d += s;
                    }
                }
            }
        }
    }
    out
}

/// `[out, hw]` = `weight[out, ckk]`·`cols[ckk, hw]` + bias per row.
pub fn conv_forward<T: Real>(weight: &[T], bias: &[T], cols: &[T], ckk: usize, hw: usize) -> Vec<T> {
    let out_ch = bias.len();
    let mut out = vec![T::zero(); out_ch * hw];
    for (row, &b) in out.chunks_mut(hw).zip(bias) {
        row.fill(b);
    }
    T::gemm(out_ch, ckk, hw, T::one(), weight, false, cols, false, T::one(), &mut out);
    out
}

pub fn relu_in_place<T: Real>(v: &mut [T]) {
    for x in v {
        if *x < T::zero() {
            *x = T::zero();
        }
    }
}

/// Zeroes the gradient wherever the activation was clipped.
pub fn relu_backward<T: Real>(grad: &mut [T], activation: &[T]) {
    for (g, &a) in grad.iter_mut().zip(activation) {
        if a <= T::zero() {
            *g = T::zero();
        }
    }
}

/// 2×2 stride-2 max-pool; returns the pooled map and, per output, the flat
/// index of the winning input (first maximum on ties).
pub fn maxpool2<T: Real>(input: &[T], c: usize, h: usize, w: usize) -> (Vec<T>, Vec<u32>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * ph * pw);
    let mut arg = Vec::with_capacity(c * ph * pw);
    for ci in 0..c {
        for y in 0..ph {
            for x in 0..pw {
                let base = ci * h * w + 2 * y * w + 2 * x;
                let mut best = base;
                for idx in [base + 1, base + w, base + w + 1] {
                    if input[idx] > input[best] {
                        best = idx;
                    }
                }
                out.push(input[best]);
                arg.push(best as u32);
            }
        }
    }
    (out, arg)
}

pub fn maxpool2_backward<T: Real>(grad: &[T], arg: &[u32], input_len: usize) -> Vec<T> {
    let mut out = vec![T::zero(); input_len];
    for (&g, &i) in grad.iter().zip(arg) {
        out[i as usize] += g;
    }
    out
}

/// Row-wise log-softmax over `[rows, cols]`. The normalizer is computed in
/// double precision so single-precision rows still sum to 1 within 1e-6.
pub fn log_softmax<T: Real>(logits: &[T], cols: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks(cols) {
        let row: Vec<f64> = row.iter().map(|v| v.to_f64().unwrap()).collect();
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        out.extend(row.iter().map(|&v| T::from_f64(v - lse)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn im2col_then_gemm_is_direct_convolution() {
        let (c, h, w, k) = (2, 5, 4, 3);
        let input: Vec<f64> = (0..c * h * w).map(|v| (v as f64 * 0.37).cos()).collect();
        let out_ch = 3;
        let weight: Vec<f64> = (0..out_ch * c * k * k).map(|v| (v as f64 * 0.11).sin()).collect();
        let bias = vec![0.1, -0.2, 0.3];
        let (oh, ow) = (h - k + 1, w - k + 1);
        let got = conv_forward(&weight, &bias, &im2col(&input, c, h, w, k), c * k * k, oh * ow);
        for o in 0..out_ch {
            for y in 0..oh {
                for x in 0..ow {
                    let mut acc = bias[o];
                    for ci in 0..c {
                        for ky in 0..k {
                            for kx in 0..k {
                                acc += weight[((o * c + ci) * k + ky) * k + kx] * input[ci * h * w + (y + ky) * w + x + kx];
                            }
                        }
                    }
                    assert!((got[o * oh * ow + y * ow + x] - acc).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn col2im_is_the_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)>
        let (c, h, w, k) = (2, 6, 5, 3);
        let x: Vec<f64> = (0..c * h * w).map(|v| (v as f64).sin()).collect();
        let cols = im2col(&x, c, h, w, k);
        let y: Vec<f64> = (0..cols.len()).map(|v| (v as f64 * 0.3).cos()).collect();
        let lhs: f64 = cols.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(col2im(&y, c, h, w, k)).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn maxpool_picks_window_maxima() {
        let input = [1.0f32, 5.0, 2.0, 0.0, 3.0, 4.0, 9.0, 9.0];
        let (out, arg) = maxpool2(&input, 1, 2, 4);
        assert_eq!(out, vec![5.0, 9.0]);
        assert_eq!(arg, vec![1, 6]);
        assert_eq!(maxpool2_backward(&[1.0f32, 2.0], &arg, 8), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
    }

    #[test]
    fn log_softmax_rows_normalize() {
        let out = log_softmax(&[1000.0f32, 1001.0, 0.0, 0.0, -3.0, 2.0], 3);
        for row in out.chunks(3) {
            let total: f32 = row.iter().map(|v| v.exp()).sum();
            assert!((total - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn relu_masks_gradient() {
        let mut a = vec![-1.0f32, 0.0, 2.0];
        relu_in_place(&mut a);
        assert_eq!(a, vec![0.0, 0.0, 2.0]);
        let mut g = vec![1.0f32; 3];
        relu_backward(&mut g, &a);
        assert_eq!(g, vec![0.0, 0.0, 1.0]);
    }
}
