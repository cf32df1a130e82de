//! Independent oracle: trigonometric polynomials stored as sparse maps from
//! integer wave vectors to complex coefficients on the `2 pi` torus.
//! Products are explicit mode-by-mode convolutions and evaluation is a
//! direct sum of exponentials, so nothing here touches the FFT.
#![allow(dead_code)]

use std::collections::BTreeMap;

use blab_core::{Field, Grid};
use num_complex::Complex64;

#[derive(Clone, Debug, Default)]
pub struct Modes(pub BTreeMap<(i64, i64), Complex64>);

impl Modes {
    pub fn zero() -> Self {
        Self::default()
    }

    fn add_mode(&mut self, k: (i64, i64), c: Complex64) {
        *self.0.entry(k).or_insert(Complex64::new(0.0, 0.0)) += c;
    }

    pub fn constant(a: f64) -> Self {
        let mut m = Self::zero();
        m.add_mode((0, 0), Complex64::new(a, 0.0));
        m
    }

    /// `a sin(k . x)`.
    pub fn sin(a: f64, k1: i64, k2: i64) -> Self {
        let mut m = Self::zero();
        m.add_mode((k1, k2), Complex64::new(0.0, -0.5 * a));
        m.add_mode((-k1, -k2), Complex64::new(0.0, 0.5 * a));
        m
    }

    /// `a cos(k . x)`.
    pub fn cos(a: f64, k1: i64, k2: i64) -> Self {
        let mut m = Self::zero();
        m.add_mode((k1, k2), Complex64::new(0.5 * a, 0.0));
        m.add_mode((-k1, -k2), Complex64::new(0.5 * a, 0.0));
        m
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut m = self.clone();
        for (k, c) in &other.0 {
            m.add_mode(*k, *c);
        }
        m
    }

    pub fn scale(&self, a: f64) -> Self {
        Self(self.0.iter().map(|(k, c)| (*k, c * a)).collect())
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut m = Self::zero();
        for ((a1, a2), x) in &self.0 {
            for ((b1, b2), y) in &other.0 {
                m.add_mode((a1 + b1, a2 + b2), x * y);
            }
        }
        m
    }

    pub fn multiplier(&self, sym: impl Fn(i64, i64) -> Complex64) -> Self {
        Self(self.0.iter().map(|(k, c)| (*k, c * sym(k.0, k.1))).collect())
    }

    pub fn d1(&self) -> Self {
        self.multiplier(|k1, _| Complex64::new(0.0, k1 as f64))
    }

    pub fn d2(&self) -> Self {
        self.multiplier(|_, k2| Complex64::new(0.0, k2 as f64))
    }

    pub fn riesz(&self) -> Self {
        self.multiplier(|k1, k2| {
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if r == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k1 as f64 / r)
            }
        })
    }

    pub fn radial(&self, profile: impl Fn(f64) -> f64) -> Self {
        self.multiplier(|k1, k2| Complex64::new(profile(((k1 * k1 + k2 * k2) as f64).sqrt()), 0.0))
    }

    /// `v . grad theta` for `v = (v1, v2)`.
    pub fn advect(v1: &Self, v2: &Self, theta: &Self) -> Self {
        v1.times(&theta.d1()).plus(&v2.times(&theta.d2()))
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.0
            .iter()
            .map(|((k1, k2), c)| (c * Complex64::from_polar(1.0, *k1 as f64 * x1 + *k2 as f64 * x2)).re)
            .sum()
    }

    pub fn field(&self, grid: Grid) -> Field {
        Field::from_fn(grid, |x1, x2| self.eval(x1, x2)).unwrap()
    }

    /// `||.||_{L^2}^2 = (2 pi)^2 sum |c_k|^2`.
    pub fn l2_sqr(&self) -> f64 {
        4.0 * std::f64::consts::PI.powi(2) * self.0.values().map(|c| c.norm_sqr()).sum::<f64>()
    }
}

pub fn grid(n: usize) -> Grid {
    Grid::standard(n).unwrap()
}

/// `max |a - b| / max(|b|, floor)`.
pub fn rel_diff(a: &Field, b: &Field, floor: f64) -> f64 {
    a.max_diff(b) / b.max_abs().max(floor)
}

/// Grid `L^p` quadrature, written out independently of the library.
pub fn lp(f: &Field, p: f64) -> f64 {
    let area = f.grid().cell_area();
    if p.is_infinite() {
        f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (area * f.values().iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }
}

/// Blocks of a sparse polynomial, applying the shell profiles mode by mode.
pub fn oracle_blocks(m: &Modes, part: &blab_core::DyadicPartition) -> Vec<Modes> {
    part.shells().map(|q| m.radial(|r| part.shell_multiplier(q, r))).collect()
}

pub fn oracle_besov(m: &Modes, s: f64, p: f64, r: f64, part: &blab_core::DyadicPartition) -> f64 {
    let g = *part.grid();
    let terms: Vec<f64> = oracle_blocks(m, part)
        .iter()
        .zip(part.shells())
        .map(|(b, q)| 2f64.powf(q as f64 * s) * lp(&b.field(g), p))
        .collect();
    if r.is_infinite() {
        terms.iter().fold(0.0, |a, &b| a.max(b))
    } else {
        terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}
