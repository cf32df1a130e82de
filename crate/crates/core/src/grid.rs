use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default fraction of the resolved spectrum kept by the dealiasing mask.
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Uniform discretization of the periodic torus `[0, period)^2`.
///
/// Physical samples are stored row-major with `x1` varying fastest:
/// value `(i, j)` sits at index `j * n + i` and position
/// `(i * period / n, j * period / n)`.
///
/// Spectral coefficients use the half plane `k1 in [0, n/2]`, stored
/// k1-major: coefficient `(k1, k2)` sits at index `k1 * n + j` where `j`
/// is the FFT-order index of `k2 in [-n/2, n/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    period: f64,
    dealias_fraction: f64,
}

/// One point of the wavenumber lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wave {
    /// Integer wavenumbers (`k1 >= 0` in the stored half plane).
    pub k1: i64,
    pub k2: i64,
    /// Physical wave vector `(2 pi / period) * k`.
    pub xi1: f64,
    pub xi2: f64,
    /// Wave vector seen by first derivatives: a component on its axis'
    /// Nyquist line is zero, so odd multipliers stay Hermitian.
    pub d1: f64,
    pub d2: f64,
    /// `|xi|`.
    pub norm: f64,
}

impl Wave {
    pub fn is_zero(&self) -> bool {
        self.k1 == 0 && self.k2 == 0
    }

    /// `|d|^2`, the symbol of `-Laplacian` as seen by derivatives.
    pub fn d_norm_sqr(&self) -> f64 {
        self.d1 * self.d1 + self.d2 * self.d2
    }
}

impl Grid {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        Self::with_dealias(n, period, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, period: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two and at least 8, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::InvalidGrid(format!(
                "dealias fraction must lie in (0, 1], got {dealias_fraction}"
            )));
        }
        Ok(Self {
            n,
            period,
            dealias_fraction,
        })
    }

    /// The `2 pi`-periodic grid used by most tests and presets.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dealias_fraction(&self) -> f64 {
        self.dealias_fraction
    }

    /// Number of physical samples, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    pub fn wavenumber_unit(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Physical Nyquist radius `(2 pi / period) * n / 2`.
    pub fn nyquist(&self) -> f64 {
        self.wavenumber_unit() * (self.n / 2) as f64
    }

    /// Largest integer wavenumber per axis kept by the dealiasing mask.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.dealias_fraction * (self.n / 2) as f64 + 1e-9).floor() as i64
    }

    /// Number of stored `k1` columns, `n/2 + 1`.
    pub fn half(&self) -> usize {
        self.n / 2 + 1
    }

    /// Length of a half-plane spectral buffer.
    pub fn spectral_len(&self) -> usize {
        self.half() * self.n
    }

    pub fn position(&self, index: usize) -> (f64, f64) {
        let h = self.spacing();
        ((index % self.n) as f64 * h, (index / self.n) as f64 * h)
    }

    /// Signed wavenumber for FFT-order index `j`.
    pub fn signed(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// FFT-order index for signed wavenumber `k` (taken modulo `n`).
    pub fn fft_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Lattice point for half-plane spectral index `idx`.
    pub fn wave(&self, idx: usize) -> Wave {
        self.wave_at((idx / self.n) as i64, self.signed(idx % self.n), self.wavenumber_unit())
    }

    fn wave_at(&self, k1: i64, k2: i64, unit: f64) -> Wave {
        let nyq = (self.n / 2) as i64;
        let xi1 = unit * k1 as f64;
        let xi2 = unit * k2 as f64;
        Wave {
            k1,
            k2,
            xi1,
            xi2,
            d1: if k1 == nyq { 0.0 } else { xi1 },
            d2: if k2 == -nyq { 0.0 } else { xi2 },
            norm: (xi1 * xi1 + xi2 * xi2).sqrt(),
        }
    }

    /// All lattice points in storage order.
    pub fn waves(&self) -> impl Iterator<Item = Wave> + '_ {
        let unit = self.wavenumber_unit();
        (0..self.half()).flat_map(move |k1| {
            (0..self.n).map(move |j| self.wave_at(k1 as i64, self.signed(j), unit))
        })
    }

    /// Whether the integer mode survives the dealiasing mask.
    pub fn is_resolved(&self, k1: i64, k2: i64) -> bool {
        let c = self.dealias_cutoff();
        k1.abs() <= c && k2.abs() <= c
    }
}
