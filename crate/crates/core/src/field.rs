use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{Grid, Wave};

/// Real samples of a scalar function on a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier-series coefficients of a real function (half-plane storage).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

/// A pair of scalar fields on the same grid. The divergence-free flag is
/// only ever set by [`VectorField::certify`].
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    u1: Field,
    u2: Field,
    certified: bool,
}

/// Relative spectral-divergence threshold used by [`VectorField::certify`].
pub const DIVERGENCE_TOLERANCE: f64 = 1e-10;

pub(crate) fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Length {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = first_non_finite(&values) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// No finiteness check; for kernel outputs that are finite by construction.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.len()])
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.position(i);
                f(x1, x2)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at grid indices `(i, j)` (`i` along `x1`).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.n() + i]
    }

    /// Re-checks the finiteness invariant, naming the first offending index.
    pub fn ensure_finite(&self) -> Result<()> {
        match first_non_finite(&self.values) {
            Some(index) => Err(Error::NonFinite { index }),
            None => Ok(()),
        }
    }

    pub fn to_spectral(&self) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: fft::forward(&self.grid, &self.values),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    /// Pointwise product (not dealiased).
    pub fn product(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    /// Largest pointwise difference.
    pub fn max_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Projection onto the modes kept by the dealiasing mask.
    pub fn dealiased(&self) -> Field {
        self.to_spectral().dealiased().to_field()
    }

    /// Mirror image under `x1 -> -x1`.
    pub fn reflect_x1(&self) -> Field {
        let n = self.grid.n();
        let mut out = vec![0.0; self.values.len()];
        for j in 0..n {
            for i in 0..n {
                out[j * n + (n - i) % n] = self.values[j * n + i];
            }
        }
        Field::from_raw(self.grid, out)
    }

    /// Band-limited interpolation onto an `m x m` grid of the same period.
    /// Content on the source Nyquist lines is dropped.
    pub fn resample(&self, m: usize) -> Result<Field> {
        let target = Grid::with_dealias(m, self.grid.period(), self.grid.dealias_fraction())?;
        let src = self.to_spectral();
        let n = self.grid.n() as i64;
        let limit = (n.min(m as i64)) / 2;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); target.spectral_len()];
        for k1 in 0..limit {
            for k2 in (1 - limit)..limit {
                coeffs[k1 as usize * m + target.fft_index(k2)] = src.coeff(k1, k2);
            }
        }
        Ok(SpectralField::from_coeffs(target, coeffs).to_field())
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.scaled(rhs)
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.spectral_len()],
        }
    }

    /// Wraps half-plane coefficients laid out as described on [`Grid`].
    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), grid.spectral_len());
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient of `e^{i k . x}` for any integer `k` (aliased modulo `n`),
    /// using conjugate symmetry for `k1 < 0`.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        let k1m = k1.rem_euclid(n);
        if k1m <= n / 2 {
            self.coeffs[k1m as usize * n as usize + self.grid.fft_index(k2)]
        } else {
            self.coeffs[(n - k1m) as usize * n as usize + self.grid.fft_index(-k2)].conj()
        }
    }

    pub fn to_field(&self) -> Field {
        Field::from_raw(self.grid, fft::inverse(&self.grid, &self.coeffs))
    }

    /// Applies a Fourier multiplier.
    pub fn multiply(&self, m: impl Fn(&Wave) -> Complex64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.waves())
            .map(|(c, w)| c * m(&w))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    /// Applies a real (even) Fourier multiplier.
    pub fn multiply_real(&self, m: impl Fn(&Wave) -> f64) -> SpectralField {
        let coeffs = self
            .coeffs
            .iter()
            .zip(self.grid.waves())
            .map(|(c, w)| c * m(&w))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn dealiased(&self) -> SpectralField {
        let n = self.grid.n();
        let c = self.grid.dealias_cutoff();
        let zero = Complex64::new(0.0, 0.0);
        let mut coeffs = self.coeffs.clone();
        for (k1, col) in coeffs.chunks_mut(n).enumerate() {
            if k1 as i64 > c {
                col.fill(zero);
                continue;
            }
            for (j, z) in col.iter_mut().enumerate() {
                if self.grid.signed(j).abs() > c {
                    *z = zero;
                }
            }
        }
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn add_assign_scaled(&mut self, a: f64, other: &SpectralField) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// Weighted Parseval sum `period^2 * sum_k |c_k|^2` over the full plane.
    pub fn energy(&self) -> f64 {
        let n = self.grid.n();
        let mut s = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k1 = idx / n;
            let w = if k1 == 0 || k1 == n / 2 { 1.0 } else { 2.0 };
            s += w * c.norm_sqr();
        }
        s * self.grid.period() * self.grid.period()
    }

    /// Largest magnitude outside the dealiasing mask.
    pub fn unresolved_magnitude(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let w = self.grid.wave(*idx);
                !self.grid.is_resolved(w.k1, w.k2)
            })
            .fold(0.0, |m, (_, c)| m.max(c.norm()))
    }
}

impl VectorField {
    pub fn new(u1: Field, u2: Field) -> Result<Self> {
        if u1.grid != u2.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            u1,
            u2,
            certified: false,
        })
    }

    /// Builds the field and certifies it divergence-free in one go.
    pub fn divergence_free(u1: Field, u2: Field) -> Result<Self> {
        Self::new(u1, u2)?.certify()
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            u1: Field::zeros(grid),
            u2: Field::zeros(grid),
            certified: true,
        }
    }

    pub(crate) fn certified_unchecked(u1: Field, u2: Field) -> Self {
        Self {
            u1,
            u2,
            certified: true,
        }
    }

    pub fn u1(&self) -> &Field {
        &self.u1
    }

    pub fn u2(&self) -> &Field {
        &self.u2
    }

    pub fn grid(&self) -> &Grid {
        &self.u1.grid
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Max over the grid of the spectral divergence.
    pub fn divergence_magnitude(&self) -> f64 {
        let a = self.u1.to_spectral().multiply(|w| Complex64::new(0.0, w.d1));
        let mut b = self.u2.to_spectral().multiply(|w| Complex64::new(0.0, w.d2));
        b.add_assign_scaled(1.0, &a);
        b.to_field().max_abs()
    }

    /// Sets the divergence-free flag after checking
    /// `max|div u| <= 1e-10 * max|u|`.
    pub fn certify(mut self) -> Result<Self> {
        let divergence = self.divergence_magnitude();
        let magnitude = self.max_norm();
        if divergence > DIVERGENCE_TOLERANCE * magnitude {
            return Err(Error::NotDivergenceFree {
                divergence,
                magnitude,
            });
        }
        self.certified = true;
        Ok(self)
    }

    /// `max_x |u(x)|` with the Euclidean pointwise norm.
    pub fn max_norm(&self) -> f64 {
        self.u1
            .values
            .iter()
            .zip(&self.u2.values)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Pointwise Euclidean magnitude as a scalar field.
    pub fn magnitude(&self) -> Field {
        self.u1.zip_map(&self.u2, f64::hypot)
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        VectorField {
            u1: self.u1.scaled(a),
            u2: self.u2.scaled(a),
            certified: self.certified,
        }
    }

    pub fn max_diff(&self, other: &VectorField) -> f64 {
        self.u1.max_diff(&other.u1).max(self.u2.max_diff(&other.u2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_names_first_bad_index() {
        let g = Grid::standard(8).unwrap();
        let mut v = vec![0.0; 64];
        v[17] = f64::NAN;
        v[40] = f64::INFINITY;
        match Field::new(g, v) {
            Err(Error::NonFinite { index }) => assert_eq!(index, 17),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Field::new(g, vec![0.0; 10]),
            Err(Error::Length { expected: 64, actual: 10 })
        ));
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(g, |x, y| (x + 0.3).sin() * (2.0 * y).cos() + x.cos()).unwrap();
        assert_eq!(f.reflect_x1().reflect_x1(), f);
        let expected = Field::from_fn(g, |x, y| (-x + 0.3).sin() * (2.0 * y).cos() + x.cos()).unwrap();
        assert!(f.reflect_x1().max_diff(&expected) < 1e-14);
    }

    #[test]
    fn resampling_keeps_band_limited_functions() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(g, |x, y| (3.0 * x - y).sin() + 0.5 * (2.0 * y).cos()).unwrap();
        let up = f.resample(64).unwrap();
        let exact = Field::from_fn(*up.grid(), |x, y| (3.0 * x - y).sin() + 0.5 * (2.0 * y).cos()).unwrap();
        assert!(up.max_diff(&exact) < 1e-13);
        let down = up.resample(16).unwrap();
        assert!(down.max_diff(&f) < 1e-13);
    }

    #[test]
    fn full_plane_coefficient_access() {
        let g = Grid::standard(16).unwrap();
        let f = Field::from_fn(g, |x, y| (2.0 * x + 3.0 * y).sin()).unwrap();
        let s = f.to_spectral();
        assert!((s.coeff(2, 3) - Complex64::new(0.0, -0.5)).norm() < 1e-14);
        assert!((s.coeff(-2, -3) - Complex64::new(0.0, 0.5)).norm() < 1e-14);
    }
}
