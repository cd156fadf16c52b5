//! FFT plumbing shared by the kernel, tensor and norm modules.
//!
//! Arrays are row-major with axis 0 varying slowest. An axis of a flat
//! array is addressed as `(outer, len, inner)`: element `(o, k, i)` lives at
//! `o * len * inner + k * inner + i`.

use num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn axis_layout(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

/// Unnormalized forward DFT of a real sequence.
pub(crate) fn dft_real(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT including the `1/n` factor.
pub(crate) fn idft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum SymbolOp {
    Multiply,
    Divide,
}

/// Applies a circulant operator along one axis.
///
/// The input fibers of length `shape[axis]` are zero-embedded with stride
/// `out_len / shape[axis]` into fibers of length `out_len`, transformed,
/// multiplied (or divided) by `symbol`, and transformed back. Returns the
/// new flat array; the shape changes only at `axis`.
pub(crate) fn circulant_along_axis(
    input: &[f64],
    shape: &[usize],
    axis: usize,
    out_len: usize,
    symbol: &[f64],
    op: SymbolOp,
) -> Vec<f64> {
    let (outer, len, inner) = axis_layout(shape, axis);
    debug_assert_eq!(input.len(), outer * len * inner);
    debug_assert_eq!(symbol.len(), out_len);
    debug_assert!(out_len.is_multiple_of(len));
    let stride = out_len / len;

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(out_len);
    let inverse = planner.plan_fft_inverse(out_len);
    let factors: Vec<f64> = match op {
        SymbolOp::Multiply => symbol.iter().map(|&l| l / out_len as f64).collect(),
        SymbolOp::Divide => symbol.iter().map(|&l| 1.0 / (l * out_len as f64)).collect(),
    };

    let mut output = vec![0.0; outer * out_len * inner];
    let mut buf = vec![Complex64::new(0.0, 0.0); out_len];
    for o in 0..outer {
        for i in 0..inner {
            buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
            for k in 0..len {
                buf[k * stride] = Complex64::new(input[o * len * inner + k * inner + i], 0.0);
            }
            forward.process(&mut buf);
            buf.iter_mut().zip(&factors).for_each(|(b, f)| *b *= f);
            inverse.process(&mut buf);
            for k in 0..out_len {
                output[o * out_len * inner + k * inner + i] = buf[k].re;
            }
        }
    }
    output
}

/// Unnormalized multidimensional forward DFT of a real array.
pub(crate) fn dft_nd(values: &[f64], shape: &[usize]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform_nd(&mut data, shape, false);
    data
}

/// Unnormalized multidimensional inverse DFT (no `1/N` factor).
pub(crate) fn idft_nd_unnormalized(data: &mut [Complex64], shape: &[usize]) {
    transform_nd(data, shape, true);
}

fn transform_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..shape.len() {
        let (outer, len, inner) = axis_layout(shape, axis);
        if len == 1 {
            continue;
        }
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for o in 0..outer {
            for i in 0..inner {
                for k in 0..len {
                    buf[k] = data[o * len * inner + k * inner + i];
                }
                fft.process(&mut buf);
                for k in 0..len {
                    data[o * len * inner + k * inner + i] = buf[k];
                }
            }
        }
    }
}

/// Signed integer frequency of DFT bin `index` on a grid of size `n`,
/// in `{-n/2, ..., n/2 - 1}`.
pub(crate) fn signed_frequency(index: usize, n: usize) -> i64 {
    if n > 1 && index >= n / 2 {
        index as i64 - n as i64
    } else {
        index as i64
    }
}
