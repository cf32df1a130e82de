//! Littlewood-Paley decomposition on the torus: dyadic blocks, low-pass
//! operators, Besov norms (space and space-time) and a Bernstein checker.
//!
//! Shells are indexed by `q in [-1, q_max]`. Blocks `-1 ..= q_max - 1` use
//! the radial profiles `chi` and `phi(2^-q .)`; the top block
//! `Delta_{q_max} = 1 - chi(2^-q_max |D|)` collects everything above, so
//! the blocks of any grid function sum back to the function exactly.

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField};
use crate::grid::Grid;
use crate::spectral::{derivative_spectral, lp_norm_of, Axis};

/// Inner radius of the `phi` annulus and plateau edge of `chi`.
pub const R0: f64 = 3.0 / 4.0;
/// Outer edge of `supp chi`.
pub const R1: f64 = 4.0 / 3.0;
/// Outer edge of `supp phi`.
pub const R2: f64 = 8.0 / 3.0;

fn bump_tail(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth monotone step: 0 for `x <= 0`, 1 for `x >= 1`.
fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = bump_tail(x);
        a / (a + bump_tail(1.0 - x))
    }
}

/// Radial low-frequency cutoff: 1 on `[0, 3/4]`, 0 on `[4/3, inf)`.
pub fn chi(r: f64) -> f64 {
    1.0 - smooth_step((r - R0) / (R1 - R0))
}

/// Annular profile `chi(r / 2) - chi(r)`, supported in `[3/4, 8/3]`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// `chi(r) + sum_{q >= 0} phi(2^-q r)`, summed until the terms vanish.
pub fn unity_sum(r: f64) -> f64 {
    let mut s = chi(r);
    let mut q = 0;
    while R0 * 2f64.powi(q) <= r.max(1.0) * 2.0 {
        s += phi(r / 2f64.powi(q));
        q += 1;
    }
    s
}

/// Dyadic partition realized on a particular grid, with per-shell
/// multiplier tables on the half-plane lattice.
#[derive(Clone, Debug)]
pub struct DyadicPartition {
    grid: Grid,
    q_max: i32,
    weights: Vec<Vec<f64>>,
}

/// Besov index `(s, p, r)`; `p` and `r` may be `f64::INFINITY`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BesovIndex {
    pub s: f64,
    pub p: f64,
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !s.is_finite() || p.is_nan() || r.is_nan() || p < 1.0 || r < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "Besov index needs finite s and p, r >= 1 (got s={s}, p={p}, r={r})"
            )));
        }
        Ok(Self { s, p, r })
    }
}

/// `l^r` norm of a finite sequence (maximum for `r = inf`).
pub fn lr_sum(values: impl IntoIterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        values.into_iter().fold(0.0, f64::max)
    } else if r == 1.0 {
        values.into_iter().map(f64::abs).sum()
    } else {
        values
            .into_iter()
            .map(|v| v.abs().powf(r))
            .sum::<f64>()
            .powf(1.0 / r)
    }
}

/// Largest shell index realizable on `grid`.
pub fn max_shell(grid: &Grid) -> i32 {
    (grid.nyquist() * grid.dealias_fraction()).log2().floor() as i32 - 1
}

pub fn build_partition(grid: &Grid) -> Result<DyadicPartition> {
    let q_max = max_shell(grid);
    if q_max < 1 {
        return Err(Error::InvalidGrid(format!(
            "grid with n = {} and period = {} cannot host shells -1, 0, 1",
            grid.n(),
            grid.period()
        )));
    }
    let radii: Vec<f64> = (0..grid.spectral_len()).map(|i| grid.wave(i).norm).collect();
    let weights = (-1..=q_max)
        .map(|q| radii.iter().map(|&r| shell_profile(q, q_max, r)).collect())
        .collect();
    Ok(DyadicPartition {
        grid: *grid,
        q_max,
        weights,
    })
}

fn shell_profile(q: i32, q_max: i32, r: f64) -> f64 {
    let scale = 2f64.powi(q);
    if q == -1 {
        chi(r)
    } else if q == q_max {
        1.0 - chi(r / scale)
    } else {
        phi(r / scale)
    }
}

impl DyadicPartition {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn q_min(&self) -> i32 {
        -1
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> {
        -1..=self.q_max
    }

    pub fn shell_count(&self) -> usize {
        (self.q_max + 2) as usize
    }

    /// Multiplier of `Delta_q` at physical radius `r`.
    pub fn shell_multiplier(&self, q: i32, r: f64) -> f64 {
        shell_profile(q, self.q_max, r)
    }

    fn check_shell(&self, q: i32) -> Result<()> {
        if q < -1 || q > self.q_max {
            return Err(Error::ShellOutOfRange {
                q,
                min: -1,
                max: self.q_max,
            });
        }
        Ok(())
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if *grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Multiplier table of `Delta_q` on the half-plane lattice.
    pub fn weights(&self, q: i32) -> Result<&[f64]> {
        self.check_shell(q)?;
        Ok(&self.weights[(q + 1) as usize])
    }

    pub fn block_spectral(&self, s: &SpectralField, q: i32) -> Result<SpectralField> {
        self.check_grid(s.grid())?;
        let w = self.weights(q)?;
        let coeffs = s.coeffs().iter().zip(w).map(|(c, &m)| c * m).collect();
        Ok(SpectralField::from_coeffs(*s.grid(), coeffs))
    }

    /// `S_q = sum_{j=-1}^{q-1} Delta_j` in spectral form.
    pub fn low_pass_spectral(&self, s: &SpectralField, q: i32) -> Result<SpectralField> {
        self.check_grid(s.grid())?;
        if q < -1 || q > self.q_max + 1 {
            return Err(Error::ShellOutOfRange {
                q,
                min: -1,
                max: self.q_max + 1,
            });
        }
        let coeffs = s
            .coeffs()
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let m: f64 = (-1..q).map(|j| self.weights[(j + 1) as usize][idx]).sum();
                c * m
            })
            .collect();
        Ok(SpectralField::from_coeffs(*s.grid(), coeffs))
    }

    /// All blocks `Delta_{-1} f, ..., Delta_{q_max} f`.
    pub fn blocks(&self, f: &Field) -> Result<Vec<Field>> {
        self.check_grid(f.grid())?;
        let s = f.to_spectral();
        self.blocks_of_spectral(&s)
    }

    pub fn blocks_of_spectral(&self, s: &SpectralField) -> Result<Vec<Field>> {
        self.shells()
            .map(|q| Ok(self.block_spectral(s, q)?.to_field()))
            .collect()
    }

    /// `||Delta_q f||_{L^p}` for every shell.
    pub fn block_norms(&self, f: &Field, p: f64) -> Result<Vec<f64>> {
        self.block_norms_spectral(&f.to_spectral(), p)
    }

    pub fn block_norms_spectral(&self, s: &SpectralField, p: f64) -> Result<Vec<f64>> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
        }
        let area = self.grid.cell_area();
        Ok(self
            .blocks_of_spectral(s)?
            .iter()
            .map(|b| lp_norm_of(b.values(), area, p))
            .collect())
    }
}

/// `Delta_q f`.
pub fn dyadic_block(f: &Field, q: i32, part: &DyadicPartition) -> Result<Field> {
    f.ensure_finite()?;
    Ok(part.block_spectral(&f.to_spectral(), q)?.to_field())
}

/// `S_q f` for `q in [-1, q_max + 1]`.
pub fn low_pass(f: &Field, q: i32, part: &DyadicPartition) -> Result<Field> {
    f.ensure_finite()?;
    Ok(part.low_pass_spectral(&f.to_spectral(), q)?.to_field())
}

/// Aggregates per-shell `L^p` norms `b_q` into `(2^{qs} b_q)_{l^r}`.
pub fn besov_from_blocks(block_norms: &[f64], s: f64, r: f64) -> f64 {
    lr_sum(
        block_norms
            .iter()
            .enumerate()
            .map(|(i, b)| 2f64.powf((i as f64 - 1.0) * s) * b),
        r,
    )
}

/// Discrete inhomogeneous Besov norm over shells `-1 ..= q_max`.
pub fn besov_norm(f: &Field, idx: BesovIndex, part: &DyadicPartition) -> Result<f64> {
    f.ensure_finite()?;
    let norms = part.block_norms(f, idx.p)?;
    Ok(besov_from_blocks(&norms, idx.s, idx.r))
}

/// Per-shell `L^p` norms of a time-dependent function, sampled at solver
/// steps.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockHistory {
    p: f64,
    times: Vec<f64>,
    norms: Vec<Vec<f64>>,
}

impl BlockHistory {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            times: Vec::new(),
            norms: Vec::new(),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Row `i` holds `||Delta_q u(t_i)||_{L^p}` for `q = -1, 0, ...`.
    pub fn norms(&self) -> &[Vec<f64>] {
        &self.norms
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, norms: Vec<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidParameter(format!(
                    "history times must increase strictly ({t} after {last})"
                )));
            }
            if norms.len() != self.norms[0].len() {
                return Err(Error::Length {
                    expected: self.norms[0].len(),
                    actual: norms.len(),
                });
            }
        }
        if norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("block norms must be finite and non-negative".into()));
        }
        self.times.push(t);
        self.norms.push(norms);
        Ok(())
    }

    /// Records the blocks of `f` at time `t`.
    pub fn record(&mut self, t: f64, f: &Field, part: &DyadicPartition) -> Result<()> {
        let norms = part.block_norms(f, self.p)?;
        self.push(t, norms)
    }

    /// Time series of shell `q` (`q >= -1`).
    pub fn shell_series(&self, q: i32) -> Vec<f64> {
        self.norms.iter().map(|row| row[(q + 1) as usize]).collect()
    }
}

/// Trapezoid weights for samples at `times`.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for i in 1..times.len() {
        let h = 0.5 * (times[i] - times[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}

/// `L^rho` norm in time of a sampled series (trapezoid rule, max for
/// `rho = inf`).
pub fn time_norm(times: &[f64], values: &[f64], rho: f64) -> f64 {
    if rho.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let w = trapezoid_weights(times);
    let s: f64 = w.iter().zip(values).map(|(w, v)| w * v.abs().powf(rho)).sum();
    s.powf(1.0 / rho)
}

/// Space-time Besov norms. With `tilde` the time norm is taken shell by
/// shell before the `l^r` sum; otherwise the Besov norm at each time is
/// integrated in time.
pub fn spacetime_besov(hist: &BlockHistory, idx: BesovIndex, rho: f64, tilde: bool) -> Result<f64> {
    if hist.is_empty() {
        return Err(Error::EmptyHistory);
    }
    if rho.is_nan() || rho < 1.0 {
        return Err(Error::InvalidParameter(format!("time exponent must be >= 1, got {rho}")));
    }
    if idx.p != hist.p {
        return Err(Error::InvalidParameter(format!(
            "history holds L^{} block norms, index asks for L^{}",
            hist.p, idx.p
        )));
    }
    let shells = hist.norms[0].len();
    if tilde {
        let per_shell: Vec<f64> = (0..shells)
            .map(|i| {
                let series: Vec<f64> = hist.norms.iter().map(|row| row[i]).collect();
                time_norm(&hist.times, &series, rho)
            })
            .collect();
        Ok(besov_from_blocks(&per_shell, idx.s, idx.r))
    } else {
        let per_time: Vec<f64> = hist
            .norms
            .iter()
            .map(|row| besov_from_blocks(row, idx.s, idx.r))
            .collect();
        Ok(time_norm(&hist.times, &per_time, rho))
    }
}

/// Outcome of [`bernstein_check`]; a `None` ratio marks a degenerate
/// (zero) denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinReport {
    pub q: i32,
    pub k: u32,
    pub a: f64,
    pub b: f64,
    /// `sup_|alpha|=k ||d^alpha S_q f||_{L^b}`.
    pub low_pass_lhs: f64,
    /// `2^{q(k + 2(1/a - 1/b))} ||S_q f||_{L^a}`.
    pub low_pass_rhs: f64,
    pub low_pass_ratio: Option<f64>,
    /// `sup_|alpha|=k ||d^alpha Delta_q f||_{L^a}`.
    pub block_lhs: f64,
    /// `2^{qk} ||Delta_q f||_{L^a}`.
    pub block_rhs: f64,
    /// Bounded above and below by the block form of the inequality.
    pub block_ratio: Option<f64>,
}

impl BernsteinReport {
    pub fn is_degenerate(&self) -> bool {
        self.low_pass_ratio.is_none() || self.block_ratio.is_none()
    }
}

/// Relative size below which a denominator counts as zero.
pub const DEGENERATE_THRESHOLD: f64 = 1e-12;

fn sup_derivative_norm(s: &SpectralField, k: u32, p: f64) -> f64 {
    let area = s.grid().cell_area();
    (0..=k)
        .map(|j| {
            let mut d = s.clone();
            for _ in 0..j {
                d = derivative_spectral(&d, Axis::X1);
            }
            for _ in j..k {
                d = derivative_spectral(&d, Axis::X2);
            }
            lp_norm_of(d.to_field().values(), area, p)
        })
        .fold(0.0, f64::max)
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

pub fn bernstein_check(
    f: &Field,
    q: i32,
    k: u32,
    a: f64,
    b: f64,
    part: &DyadicPartition,
) -> Result<BernsteinReport> {
    if !(a >= 1.0 && b >= a) {
        return Err(Error::InvalidParameter(format!(
            "Bernstein exponents need 1 <= a <= b (got a={a}, b={b})"
        )));
    }
    if q < 0 || q > part.q_max() {
        return Err(Error::ShellOutOfRange {
            q,
            min: 0,
            max: part.q_max(),
        });
    }
    f.ensure_finite()?;
    let area = f.grid().cell_area();
    let scale = lp_norm_of(f.values(), area, a);
    let s = f.to_spectral();
    let two_q = 2f64.powi(q);

    let low = part.low_pass_spectral(&s, q)?;
    let low_a = lp_norm_of(low.to_field().values(), area, a);
    let low_pass_lhs = sup_derivative_norm(&low, k, b);
    let low_pass_rhs = two_q.powf(k as f64 + 2.0 * (inv(a) - inv(b))) * low_a;
    let low_pass_ratio = (low_a > DEGENERATE_THRESHOLD * scale).then(|| low_pass_lhs / low_pass_rhs);

    let block = part.block_spectral(&s, q)?;
    let block_a = lp_norm_of(block.to_field().values(), area, a);
    let block_lhs = sup_derivative_norm(&block, k, a);
    let block_rhs = two_q.powi(k as i32) * block_a;
    let block_ratio = (block_a > DEGENERATE_THRESHOLD * scale).then(|| block_lhs / block_rhs);

    Ok(BernsteinReport {
        q,
        k,
        a,
        b,
        low_pass_lhs,
        low_pass_rhs,
        low_pass_ratio,
        block_lhs,
        block_rhs,
        block_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_have_the_advertised_supports() {
        assert_eq!(chi(0.0), 1.0);
        assert_eq!(chi(R0), 1.0);
        assert_eq!(chi(R1), 0.0);
        assert_eq!(phi(R0), 0.0);
        assert_eq!(phi(R2), 0.0);
        assert_eq!(phi(1.4), 1.0);
        assert!(phi(1.0) > 0.0 && phi(1.0) < 1.0);
        for i in 0..=4000 {
            let r = i as f64 * 0.01;
            assert!((unity_sum(r) - 1.0).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn q_max_matches_lattice_enumeration() {
        for n in [16usize, 32, 64, 128, 256] {
            let g = Grid::standard(n).unwrap();
            // largest lattice radius kept by the dealias fraction
            let radius = g.dealias_fraction() * (n / 2) as f64;
            let mut q = -1;
            while 2f64.powi(q + 2) <= radius {
                q += 1;
            }
            assert_eq!(max_shell(&g), q, "n = {n}");
        }
        assert_eq!(build_partition(&Grid::standard(64).unwrap()).unwrap().q_max(), 3);
    }

    #[test]
    fn tiny_grids_are_rejected() {
        assert!(build_partition(&Grid::standard(8).unwrap()).is_err());
        assert!(build_partition(&Grid::standard(16).unwrap()).is_ok());
    }

    #[test]
    fn shell_range_is_enforced() {
        let g = Grid::standard(32).unwrap();
        let part = build_partition(&g).unwrap();
        let f = Field::constant(g, 1.0);
        assert!(matches!(
            dyadic_block(&f, part.q_max() + 1, &part),
            Err(Error::ShellOutOfRange { .. })
        ));
        assert!(dyadic_block(&f, -2, &part).is_err());
        assert!(low_pass(&f, part.q_max() + 1, &part).is_ok());
        assert!(low_pass(&f, part.q_max() + 2, &part).is_err());
    }

    #[test]
    fn history_rejects_non_increasing_times() {
        let mut h = BlockHistory::new(2.0);
        h.push(0.0, vec![1.0, 2.0]).unwrap();
        assert!(h.push(0.0, vec![1.0, 2.0]).is_err());
        assert!(h.push(1.0, vec![1.0]).is_err());
        assert!(h.push(1.0, vec![1.0, -2.0]).is_err());
        let idx = BesovIndex::new(0.0, 2.0, 1.0).unwrap();
        assert!(matches!(
            spacetime_besov(&BlockHistory::new(2.0), idx, 1.0, true),
            Err(Error::EmptyHistory)
        ));
    }

    #[test]
    fn trapezoid_weights_integrate_linears_exactly() {
        let t = [0.0, 0.1, 0.35, 1.0];
        let w = trapezoid_weights(&t);
        let s: f64 = w.iter().zip(&t).map(|(w, t)| w * (2.0 * t + 1.0)).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }
}
