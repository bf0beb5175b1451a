//! Multi-dimensional FFT on row-major data, axis by axis, with shared plans.
//!
//! Normalization is fixed crate-wide: the forward transform is the plain
//! unnormalized sum, the inverse carries 1/prod(N_i). This keeps serialized
//! spectra unambiguous.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static P: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    P.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = planner().lock().unwrap();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

/// Row-major strides for a shape.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let d = shape.len();
    let mut st = vec![1usize; d];
    for a in (0..d.saturating_sub(1)).rev() {
        st[a] = st[a + 1] * shape[a + 1];
    }
    st
}

/// In-place d-dimensional transform of one row-major complex array.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], inverse: bool) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "data length must match shape product");
    let st = strides(shape);
    for a in 0..shape.len() {
        let n = shape[a];
        if n == 1 {
            continue;
        }
        let fft = plan(n, inverse);
        let stride = st[a];
        let block = n * stride;
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for b in 0..total / block {
            for off in 0..stride {
                let base = b * block + off;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = data[base + t * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Forward transform of real samples.
pub fn forward_real(samples: &[f64], shape: &[usize]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, shape, false);
    buf
}

/// Inverse transform, returning the real parts. The imaginary residue of a
/// Hermitian spectrum is roundoff and is dropped.
pub fn inverse_to_real(spectrum: &[Complex64], shape: &[usize]) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    fft_nd(&mut buf, shape, true);
    buf.into_iter().map(|v| v.re).collect()
}
