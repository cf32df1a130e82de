//! Reproducible random fields: Fourier coefficients with a power-law
//! amplitude `|k|^slope` and uniformly random phases.
//!
//! Each mode draws its phase from its own generator seeded by
//! `(seed, stream, k1, k2)`, so the field at a finer resolution shares every
//! coarse mode with the field at a coarser one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{Field, SpectralField, VectorField};
use crate::grid::Grid;
use crate::spectral::leray_project;

/// Shape of the random spectrum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumSpec {
    /// Exponent of the amplitude law `|k|^slope` (integer lattice norm).
    pub slope: f64,
    /// Largest integer lattice radius populated; `None` fills the whole
    /// dealiasing mask.
    pub k_max: Option<f64>,
}

impl SpectrumSpec {
    pub fn new(slope: f64) -> Self {
        Self { slope, k_max: None }
    }

    pub fn band_limited(slope: f64, k_max: f64) -> Self {
        Self {
            slope,
            k_max: Some(k_max),
        }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives an independent seed from a base seed and a list of labels.
pub fn derive_seed(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

fn mode_phase(seed: u64, stream: u64, k1: i64, k2: i64) -> f64 {
    let s = derive_seed(seed, &[stream, k1 as u64, k2 as u64]);
    ChaCha8Rng::seed_from_u64(s).gen_range(0.0..2.0 * PI)
}

fn random_spectral(grid: &Grid, spec: SpectrumSpec, seed: u64, stream: u64) -> SpectralField {
    let n = grid.n();
    let cutoff = grid.dealias_cutoff();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.spectral_len()];
    for k1 in 0..=cutoff {
        for k2 in -cutoff..=cutoff {
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let radius = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if spec.k_max.is_some_and(|k| radius > k) {
                continue;
            }
            let c = Complex64::from_polar(0.5 * radius.powf(spec.slope), mode_phase(seed, stream, k1, k2));
            coeffs[k1 as usize * n + grid.fft_index(k2)] = c;
            if k1 == 0 {
                coeffs[grid.fft_index(-k2)] = c.conj();
            }
        }
    }
    SpectralField::from_coeffs(*grid, coeffs)
}

fn rms(f: &Field) -> f64 {
    (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt()
}

/// Mean-free random scalar with unit root-mean-square value.
pub fn random_scalar(grid: &Grid, spec: SpectrumSpec, seed: u64) -> Field {
    let f = random_spectral(grid, spec, seed, 0).to_field();
    let s = rms(&f);
    if s > 0.0 {
        f.scaled(1.0 / s)
    } else {
        f
    }
}

/// Divergence-free random velocity (Leray projection of two random
/// scalars) with unit root-mean-square magnitude.
pub fn random_velocity(grid: &Grid, spec: SpectrumSpec, seed: u64) -> Result<VectorField> {
    let a = random_spectral(grid, spec, seed, 1).to_field();
    let b = random_spectral(grid, spec, seed, 2).to_field();
    let v = leray_project(&VectorField::new(a, b)?)?;
    let mag = v.magnitude();
    let s = rms(&mag);
    Ok(if s > 0.0 { v.scaled(1.0 / s) } else { v })
}

/// Uniform draw in `[0, 1)` from a labelled stream.
pub fn uniform(seed: u64, labels: &[u64]) -> f64 {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, labels)).gen_range(0.0..1.0)
}
