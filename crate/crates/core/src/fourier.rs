//! Axis-wise FFTs on flat row-major arrays (last axis fastest).

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Signed FFT index for position k of a length-n transform.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// In-place transform along one axis of an array with `dims` axes of length
/// `n`. The inverse is normalized by 1/n.
pub fn fft_axis(data: &mut [C64], dims: usize, n: usize, axis: usize, inverse: bool) {
    assert_eq!(data.len(), n.pow(dims as u32));
    fft_shape(data, &vec![n; dims], axis, inverse);
}

/// In-place transform along `axis` of a row-major array of the given shape.
pub fn fft_shape(data: &mut [C64], shape: &[usize], axis: usize, inverse: bool) {
    assert_eq!(data.len(), shape.iter().product::<usize>());
    let n = shape[axis];
    let fft = plan(n, inverse);
    let stride: usize = shape[axis + 1..].iter().product();
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    if stride == 1 {
        data.par_chunks_mut(n).for_each(|row| {
            fft.process(row);
            if inverse {
                row.iter_mut().for_each(|v| *v *= scale);
            }
        });
        return;
    }
    let block = stride * n;
    data.par_chunks_mut(block).for_each(|chunk| {
        let mut line = vec![C64::new(0.0, 0.0); n];
        for off in 0..stride {
            for k in 0..n {
                line[k] = chunk[off + k * stride];
            }
            fft.process(&mut line);
            for k in 0..n {
                chunk[off + k * stride] = line[k] * scale;
            }
        }
    });
}

pub fn fftn(data: &mut [C64], dims: usize, n: usize, inverse: bool) {
    for axis in 0..dims {
        fft_axis(data, dims, n, axis, inverse);
    }
}

/// Multi-index (row-major) of a flat index.
pub fn unravel(mut idx: usize, dims: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    for d in (0..dims).rev() {
        out[d] = idx % n;
        idx /= n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let n = 8;
        let orig: Vec<C64> = (0..n * n).map(|i| C64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut d = orig.clone();
        fftn(&mut d, 2, n, false);
        fftn(&mut d, 2, n, true);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn axis_transform_of_pure_mode() {
        let n = 16;
        let mut d = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * 3.0 * i as f64 / n as f64);
            }
        }
        fft_axis(&mut d, 2, n, 0, false);
        for j in 0..n {
            assert!((d[3 * n + j].re - n as f64).abs() < 1e-10);
            assert!(d[5 * n + j].norm() < 1e-10);
        }
    }
}
