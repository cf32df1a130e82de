//! Bony paraproduct decomposition, the Riesz and dyadic-block commutators
//! with a transport field, and ratio reports for the associated estimates.
//!
//! Products entering a commutator are dealiased with the grid's mask, so for
//! inputs band-limited to the mask they equal the exact products.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, VectorField};
use crate::lp::{besov_norm, BesovIndex, DyadicPartition};
use crate::spectral::{
    abs_d_spectral, curl, derivative_spectral, lebesgue_norm, riesz_spectral,
    velocity_gradient_norm, Axis,
};

/// `u v = T_u v + T_v u + R(u, v)`.
#[derive(Clone, Debug)]
pub struct BonySplit {
    /// Paraproduct of `v` by `u`: `sum_q S_{q-1} u Delta_q v`.
    pub t_uv: Field,
    /// `sum_q S_{q-1} v Delta_q u`.
    pub t_vu: Field,
    /// `sum_q Delta_q u (Delta_{q-1} + Delta_q + Delta_{q+1}) v`.
    pub remainder: Field,
}

impl BonySplit {
    pub fn sum(&self) -> Field {
        &(&self.t_uv + &self.t_vu) + &self.remainder
    }
}

fn paraproduct(low: &[Field], high: &[Field]) -> Field {
    let grid = *low[0].grid();
    let mut acc = vec![0.0; grid.len()];
    let mut partial = vec![0.0; grid.len()];
    // shell index i corresponds to q = i - 1; S_{q-1} holds blocks j <= q - 2
    for i in 0..high.len() {
        if i >= 2 {
            for (s, b) in partial.iter_mut().zip(low[i - 2].values()) {
                *s += b;
            }
            for ((a, s), h) in acc.iter_mut().zip(&partial).zip(high[i].values()) {
                *a += s * h;
            }
        }
    }
    Field::from_raw(grid, acc)
}

pub fn bony_split(u: &Field, v: &Field, part: &DyadicPartition) -> Result<BonySplit> {
    if u.grid() != v.grid() || u.grid() != part.grid() {
        return Err(Error::GridMismatch);
    }
    let bu = part.blocks(u)?;
    let bv = part.blocks(v)?;
    let t_uv = paraproduct(&bu, &bv);
    let t_vu = paraproduct(&bv, &bu);
    let mut rem = vec![0.0; u.grid().len()];
    for i in 0..bu.len() {
        for j in i.saturating_sub(1)..(i + 2).min(bv.len()) {
            for ((r, a), b) in rem.iter_mut().zip(bu[i].values()).zip(bv[j].values()) {
                *r += a * b;
            }
        }
    }
    Ok(BonySplit {
        t_uv,
        t_vu,
        remainder: Field::from_raw(*u.grid(), rem),
    })
}

/// Dealiased `v . grad theta` in spectral form. `theta` is masked before
/// differentiation and the product is masked afterwards.
pub fn advection_spectral(v1: &Field, v2: &Field, theta: &SpectralField) -> SpectralField {
    let masked = theta.dealiased();
    let g1 = derivative_spectral(&masked, Axis::X1).to_field();
    let g2 = derivative_spectral(&masked, Axis::X2).to_field();
    let values = v1
        .values()
        .iter()
        .zip(v2.values())
        .zip(g1.values().iter().zip(g2.values()))
        .map(|((a, b), (c, d))| a * c + b * d)
        .collect();
    Field::from_raw(*theta.grid(), values).to_spectral().dealiased()
}

fn masked_velocity(v: &VectorField) -> Result<(Field, Field)> {
    if !v.is_certified() {
        return Err(Error::NotDivergenceFree {
            divergence: v.divergence_magnitude(),
            magnitude: v.max_norm(),
        });
    }
    Ok((v.u1().dealiased(), v.u2().dealiased()))
}

fn check_pair(v: &VectorField, theta: &Field) -> Result<()> {
    if v.grid() != theta.grid() {
        return Err(Error::GridMismatch);
    }
    theta.ensure_finite()
}

/// `[R, v . grad] theta = R(v . grad theta) - v . grad(R theta)`.
pub fn commutator_riesz(v: &VectorField, theta: &Field) -> Result<Field> {
    check_pair(v, theta)?;
    let (v1, v2) = masked_velocity(v)?;
    let s = theta.to_spectral();
    let mut out = riesz_spectral(&advection_spectral(&v1, &v2, &s));
    out.add_assign_scaled(-1.0, &advection_spectral(&v1, &v2, &riesz_spectral(&s)));
    Ok(out.to_field())
}

/// `[Delta_q, v . grad] theta = Delta_q(v . grad theta) - v . grad(Delta_q theta)`.
pub fn commutator_block(
    v: &VectorField,
    theta: &Field,
    q: i32,
    part: &DyadicPartition,
) -> Result<Field> {
    check_pair(v, theta)?;
    let (v1, v2) = masked_velocity(v)?;
    let s = theta.to_spectral();
    commutator_block_with(&v1, &v2, &s, q, part)
}

fn commutator_block_with(
    v1: &Field,
    v2: &Field,
    s: &SpectralField,
    q: i32,
    part: &DyadicPartition,
) -> Result<Field> {
    let mut out = part.block_spectral(&advection_spectral(v1, v2, s), q)?;
    out.add_assign_scaled(-1.0, &advection_spectral(v1, v2, &part.block_spectral(s, q)?));
    Ok(out.to_field())
}

/// Provenance attached to every ratio report.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReportMeta {
    pub seed: Option<u64>,
    pub n: usize,
    pub slope: Option<f64>,
    pub shell: Option<i32>,
}

/// One evaluated estimate `lhs <= C * prod(rhs_factors)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub estimate: String,
    pub lhs: f64,
    pub rhs_factors: Vec<(String, f64)>,
    /// `lhs / prod(rhs_factors)`; `None` flags a 0/0 case.
    pub ratio: Option<f64>,
    pub meta: ReportMeta,
}

impl InequalityReport {
    pub fn new(estimate: &str, lhs: f64, rhs_factors: Vec<(String, f64)>, meta: ReportMeta) -> Self {
        let rhs: f64 = rhs_factors.iter().map(|(_, v)| v).product();
        let ratio = if rhs > 0.0 {
            Some(lhs / rhs)
        } else if lhs == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        };
        Self {
            estimate: estimate.to_string(),
            lhs,
            rhs_factors,
            ratio,
            meta,
        }
    }

    pub fn rhs(&self) -> f64 {
        self.rhs_factors.iter().map(|(_, v)| v).product()
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio.is_none()
    }

    pub fn with_meta(mut self, meta: ReportMeta) -> Self {
        self.meta = meta;
        self
    }
}

fn meta_for(theta: &Field) -> ReportMeta {
    ReportMeta {
        n: theta.grid().n(),
        ..ReportMeta::default()
    }
}

/// `||[R, v.grad]theta||_{B^0_{p,r}}` against
/// `||grad v||_{L^p} (||theta||_{B^0_{inf,r}} + ||theta||_{L^p})`, `p in [2, inf)`.
pub fn check_commutator_thm_part1(
    v: &VectorField,
    theta: &Field,
    p: f64,
    r: f64,
    part: &DyadicPartition,
) -> Result<InequalityReport> {
    if !(2.0..f64::INFINITY).contains(&p) {
        return Err(Error::Hypothesis(format!("p must lie in [2, inf), got {p}")));
    }
    let comm = commutator_riesz(v, theta)?;
    let lhs = besov_norm(&comm, BesovIndex::new(0.0, p, r)?, part)?;
    let grad = velocity_gradient_norm(v, p)?;
    let theta_part = besov_norm(theta, BesovIndex::new(0.0, f64::INFINITY, r)?, part)?
        + lebesgue_norm(theta, p)?;
    Ok(InequalityReport::new(
        "thm33p1",
        lhs,
        vec![("grad_v_Lp".into(), grad), ("theta_B0_inf_r+Lp".into(), theta_part)],
        meta_for(theta),
    ))
}

/// `||[R, v.grad]theta||_{B^0_{inf,r}}` against
/// `(||omega||_inf + ||omega||_rho)(||theta||_{B^eps_{inf,r}} + ||theta||_rho)`.
pub fn check_commutator_thm_part2(
    v: &VectorField,
    theta: &Field,
    rho: f64,
    epsilon: f64,
    r: f64,
    part: &DyadicPartition,
) -> Result<InequalityReport> {
    if !(rho > 1.0 && rho < f64::INFINITY) {
        return Err(Error::Hypothesis(format!("rho must lie in (1, inf), got {rho}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Hypothesis(format!("epsilon must be positive, got {epsilon}")));
    }
    let comm = commutator_riesz(v, theta)?;
    let lhs = besov_norm(&comm, BesovIndex::new(0.0, f64::INFINITY, r)?, part)?;
    let omega = curl(v);
    let omega_part = lebesgue_norm(&omega, f64::INFINITY)? + lebesgue_norm(&omega, rho)?;
    let theta_part = besov_norm(theta, BesovIndex::new(epsilon, f64::INFINITY, r)?, part)?
        + lebesgue_norm(theta, rho)?;
    Ok(InequalityReport::new(
        "thm33p2",
        lhs,
        vec![
            ("omega_Linf+Lrho".into(), omega_part),
            ("theta_Beps_inf_r+Lrho".into(), theta_part),
        ],
        meta_for(theta),
    ))
}

/// Per-shell reports for `||[Delta_q, v.grad]theta||_{L^p}` against
/// `||grad v||_{L^p} ||theta||_{B^0_{inf,inf}}`.
#[derive(Clone, Debug)]
pub struct ShellReports {
    pub shells: Vec<InequalityReport>,
}

impl ShellReports {
    /// The shell with the largest ratio (degenerate shells are skipped
    /// here but remain in `shells`).
    pub fn worst(&self) -> &InequalityReport {
        self.shells
            .iter()
            .filter(|r| r.ratio.is_some())
            .max_by(|a, b| a.ratio.partial_cmp(&b.ratio).expect("ratios are not NaN"))
            .unwrap_or(&self.shells[0])
    }
}

pub fn check_commutator_lemma43(
    v: &VectorField,
    theta: &Field,
    p: f64,
    part: &DyadicPartition,
) -> Result<ShellReports> {
    check_pair(v, theta)?;
    let (v1, v2) = masked_velocity(v)?;
    let grad = velocity_gradient_norm(v, p)?;
    let theta_b = besov_norm(theta, BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY)?, part)?;
    let s = theta.to_spectral();
    let shells = part
        .shells()
        .map(|q| {
            let comm = commutator_block_with(&v1, &v2, &s, q, part)?;
            let lhs = lebesgue_norm(&comm, p)?;
            let meta = ReportMeta {
                shell: Some(q),
                ..meta_for(theta)
            };
            Ok(InequalityReport::new(
                "lemma43",
                lhs,
                vec![("grad_v_Lp".into(), grad), ("theta_B0_inf_inf".into(), theta_b)],
                meta,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShellReports { shells })
}

/// Hoelder conjugate exponent.
pub fn conjugate_exponent(m: f64) -> f64 {
    if m == 1.0 {
        f64::INFINITY
    } else if m.is_infinite() {
        1.0
    } else {
        m / (m - 1.0)
    }
}

/// Periodic convolution `(h * u)(x) = int_T h(y) u(x - y) dy`.
pub fn convolve(h: &Field, u: &Field) -> Field {
    let area = h.grid().period() * h.grid().period();
    let a = h.to_spectral();
    let b = u.to_spectral();
    let coeffs = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| x * y * area)
        .collect();
    SpectralField::from_coeffs(*h.grid(), coeffs).to_field()
}

/// `|x|` measured to the nearest periodic image of the origin.
pub fn periodic_distance_weight(h: &Field) -> Field {
    let g = *h.grid();
    let period = g.period();
    let wrap = |x: f64| if x >= 0.5 * period { x - period } else { x };
    let values = h
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x1, x2) = g.position(i);
            wrap(x1).hypot(wrap(x2)) * v
        })
        .collect();
    Field::from_raw(g, values)
}

/// Convolution commutator `||h*(fg) - f(h*g)||_{L^p}` against
/// `||x h||_{L^{m'}} ||grad f||_{L^p} ||g||_{L^m}`; the constant is 1.
pub fn check_conv_commutator(h: &Field, f: &Field, g: &Field, p: f64, m: f64) -> Result<InequalityReport> {
    if h.grid() != f.grid() || f.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    if m.is_nan() || m < 1.0 {
        return Err(Error::InvalidParameter(format!("m must be >= 1, got {m}")));
    }
    let m_conj = conjugate_exponent(m);
    if p.is_nan() || p < m_conj {
        return Err(Error::Hypothesis(format!("need p >= m' = {m_conj}, got p = {p}")));
    }
    let fg = f.product(g);
    let diff = &convolve(h, &fg) - &f.product(&convolve(h, g));
    let lhs = lebesgue_norm(&diff, p)?;
    let xh = lebesgue_norm(&periodic_distance_weight(h), m_conj)?;
    let grad_f = lebesgue_norm(&crate::spectral::gradient_magnitude(f), p)?;
    let g_m = lebesgue_norm(g, m)?;
    Ok(InequalityReport::new(
        "lemma32",
        lhs,
        vec![
            ("xh_Lm'".into(), xh),
            ("grad_f_Lp".into(), grad_f),
            ("g_Lm".into(), g_m),
        ],
        meta_for(f),
    ))
}

/// Largest integer wavenumber component carrying non-negligible energy.
fn spectral_extent(s: &SpectralField) -> i64 {
    let peak = s.coeffs().iter().fold(0.0_f64, |m, c| m.max(c.norm()));
    let mut k = 0;
    for (idx, c) in s.coeffs().iter().enumerate() {
        if c.norm() > 1e-15 * peak {
            let w = s.grid().wave(idx);
            k = k.max(w.k1.abs()).max(w.k2.abs());
        }
    }
    k
}

/// `int (|D| theta_q) |theta_q|^{p-2} theta_q dx` against `2^q ||theta_q||_p^p`
/// for even `p`. Both integrands are polynomials of degree `p` in band-limited
/// functions and are evaluated on a zero-padded grid fine enough to make the
/// quadrature exact.
pub fn check_generalized_bernstein(theta_q: &Field, q: i32, p: u32) -> Result<InequalityReport> {
    if p < 2 || !p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "generalized Bernstein check needs an even integer p >= 2, got {p}"
        )));
    }
    if q < -1 {
        return Err(Error::InvalidParameter(format!("shell index must be >= -1, got {q}")));
    }
    theta_q.ensure_finite()?;
    let s = theta_q.to_spectral();
    let extent = spectral_extent(&s);
    let n = theta_q.grid().n();
    let padded = ((p as usize) * extent as usize + 1).next_power_of_two().max(n).max(8);
    let theta = theta_q.resample(padded)?;
    let d_theta = abs_d_spectral(&s, 1.0).to_field().resample(padded)?;
    let area = theta.grid().cell_area();
    let pm1 = (p - 1) as i32;
    let lhs: f64 = area
        * theta
            .values()
            .iter()
            .zip(d_theta.values())
            .map(|(t, d)| d * t.powi(pm1))
            .sum::<f64>();
    let lp_p: f64 = area * theta.values().iter().map(|t| t.powi(p as i32)).sum::<f64>();
    let meta = ReportMeta {
        shell: Some(q),
        ..meta_for(theta_q)
    };
    Ok(InequalityReport::new(
        "genbernstein",
        lhs,
        vec![("2^q".into(), 2f64.powi(q)), ("theta_q_Lp^p".into(), lp_p)],
        meta,
    ))
}

/// Periodic Gaussian bump of standard deviation `width` centred at `center`,
/// normalized to unit integral.
pub fn gaussian_kernel(grid: crate::Grid, width: f64, center: (f64, f64)) -> Result<Field> {
    let period = grid.period();
    let wrap = |x: f64| {
        let y = x.rem_euclid(period);
        if y >= 0.5 * period {
            y - period
        } else {
            y
        }
    };
    let norm = 1.0 / (2.0 * PI * width * width);
    Field::from_fn(grid, |x1, x2| {
        let d1 = wrap(x1 - center.0);
        let d2 = wrap(x2 - center.1);
        norm * (-(d1 * d1 + d2 * d2) / (2.0 * width * width)).exp()
    })
}
