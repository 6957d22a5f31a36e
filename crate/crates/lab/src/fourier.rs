//! Multi-dimensional FFT on row-major grid arrays.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place unnormalized FFT along every axis of an `n^dim` row-major array.
/// `inverse` selects the `e^{+i}` kernel; no `1/n` factor is applied.
pub(crate) fn fft_nd(data: &mut [Complex64], n: usize, dim: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n.pow(dim as u32));
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    if dim == 1 {
        fft.process(data);
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base_block in (0..data.len()).step_by(block) {
            for offset in 0..stride {
                let start = base_block + offset;
                for (k, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + k * stride];
                }
                fft.process(&mut line);
                for (k, value) in line.iter().enumerate() {
                    data[start + k * stride] = *value;
                }
            }
        }
    }
}

/// Signed FFT frequency index for position `m` in an `n`-point transform.
pub(crate) fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}
