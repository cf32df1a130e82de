//! Two-dimensional real FFTs on the half-plane layout described in [`Grid`].
//!
//! Rows are transformed with a real-to-complex FFT along `x1`, the result is
//! transposed so each `k1` column is contiguous, and the `x2` axis is then
//! handled with complex FFTs. Forward transforms are normalized so the
//! stored values are Fourier-series coefficients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut real = RealFftPlanner::<f64>::new();
            let mut complex = FftPlanner::<f64>::new();
            Arc::new(Plans {
                r2c: real.plan_fft_forward(n),
                c2r: real.plan_fft_inverse(n),
                forward: complex.plan_fft_forward(n),
                inverse: complex.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Forward transform of `n x n` real samples into normalized half-plane
/// coefficients.
pub fn forward(grid: &Grid, values: &[f64]) -> Vec<Complex64> {
    let n = grid.n();
    let half = grid.half();
    debug_assert_eq!(values.len(), n * n);
    let p = plans(n);

    let mut row = p.r2c.make_input_vec();
    let mut spec_row = p.r2c.make_output_vec();
    let mut scratch = p.r2c.make_scratch_vec();
    let mut rows = vec![Complex64::new(0.0, 0.0); n * half];
    for j in 0..n {
        row.copy_from_slice(&values[j * n..(j + 1) * n]);
        p.r2c
            .process_with_scratch(&mut row, &mut spec_row, &mut scratch)
            .expect("buffer sizes fixed by the plan");
        rows[j * half..(j + 1) * half].copy_from_slice(&spec_row);
    }
    let mut out = vec![Complex64::new(0.0, 0.0); half * n];
    transpose(&rows, &mut out, n, half);

    let mut cscratch = vec![Complex64::new(0.0, 0.0); p.forward.get_inplace_scratch_len()];
    p.forward.process_with_scratch(&mut out, &mut cscratch);

    let scale = 1.0 / (n * n) as f64;
    for c in out.iter_mut() {
        *c *= scale;
    }
    out
}

/// Blocked transpose of a `rows x cols` row-major matrix.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Inverse of [`forward`]. The imaginary parts that a real signal cannot
/// carry (the `k1 = 0` and `k1 = n/2` entries after the `x2` pass) are
/// discarded.
pub fn inverse(grid: &Grid, coeffs: &[Complex64]) -> Vec<f64> {
    let n = grid.n();
    let half = grid.half();
    debug_assert_eq!(coeffs.len(), half * n);
    let p = plans(n);

    let mut buf = coeffs.to_vec();
    let mut cscratch = vec![Complex64::new(0.0, 0.0); p.inverse.get_inplace_scratch_len()];
    p.inverse.process_with_scratch(&mut buf, &mut cscratch);
    let mut rows = vec![Complex64::new(0.0, 0.0); n * half];
    transpose(&buf, &mut rows, half, n);

    let mut spec_row = p.c2r.make_input_vec();
    let mut row = p.c2r.make_output_vec();
    let mut scratch = p.c2r.make_scratch_vec();
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        spec_row.copy_from_slice(&rows[j * half..(j + 1) * half]);
        spec_row[0].im = 0.0;
        spec_row[half - 1].im = 0.0;
        p.c2r
            .process_with_scratch(&mut spec_row, &mut row, &mut scratch)
            .expect("imaginary parts cleared above");
        out[j * n..(j + 1) * n].copy_from_slice(&row);
    }
    out
}
