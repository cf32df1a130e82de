//! Integrating-factor RK4 (Lawson) for `u' = -L u + N(u, t)` with `L`
//! diagonal in Fourier space.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::spectral::abs_d_symbol;

/// Full- and half-step factors `exp(-rate h)`, `exp(-rate h / 2)` per component.
type Factors = Vec<Option<(Vec<f64>, Vec<f64>)>>;

/// Per-component damping rates; `None` marks an undamped component.
#[derive(Clone, Debug)]
pub(crate) struct Damping {
    rates: Vec<Option<Vec<f64>>>,
    cached: Option<(f64, Factors)>,
}

impl Damping {
    /// `|xi|^alpha` for damped components.
    pub(crate) fn fractional(grid: &Grid, alpha: f64, damped: &[bool]) -> Self {
        let symbol: Vec<f64> = (0..grid.spectral_len())
            .map(|i| abs_d_symbol(&grid.wave(i), alpha))
            .collect();
        Self {
            rates: damped.iter().map(|&d| d.then(|| symbol.clone())).collect(),
            cached: None,
        }
    }

    fn factors(&mut self, h: f64) -> &[Option<(Vec<f64>, Vec<f64>)>] {
        let stale = self.cached.as_ref().is_none_or(|(ch, _)| *ch != h);
        if stale {
            let f = self
                .rates
                .iter()
                .map(|r| {
                    r.as_ref().map(|r| {
                        (
                            r.iter().map(|k| (-k * h).exp()).collect(),
                            r.iter().map(|k| (-k * 0.5 * h).exp()).collect(),
                        )
                    })
                })
                .collect();
            self.cached = Some((h, f));
        }
        &self.cached.as_ref().unwrap().1
    }
}

fn damp(u: &SpectralField, factor: Option<&Vec<f64>>) -> SpectralField {
    let mut out = u.clone();
    if let Some(f) = factor {
        for (c, e) in out.coeffs_mut().iter_mut().zip(f) {
            *c *= *e;
        }
    }
    out
}

fn axpy(u: &SpectralField, a: f64, k: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    out.add_assign_scaled(a, k);
    out
}

/// One Lawson RK4 step of size `h` from time `t`.
pub(crate) fn lawson_rk4<F>(
    u: &[SpectralField],
    t: f64,
    h: f64,
    damping: &mut Damping,
    mut rhs: F,
) -> Result<Vec<SpectralField>>
where
    F: FnMut(&[SpectralField], f64) -> Result<Vec<SpectralField>>,
{
    let factors = damping.factors(h).to_vec();
    let full = |i: usize| factors[i].as_ref().map(|f| &f.0);
    let half = |i: usize| factors[i].as_ref().map(|f| &f.1);
    let m = u.len();

    let k1 = rhs(u, t)?;
    let s2: Vec<_> = (0..m).map(|i| damp(&axpy(&u[i], 0.5 * h, &k1[i]), half(i))).collect();
    let k2 = rhs(&s2, t + 0.5 * h)?;
    let s3: Vec<_> = (0..m).map(|i| axpy(&damp(&u[i], half(i)), 0.5 * h, &k2[i])).collect();
    let k3 = rhs(&s3, t + 0.5 * h)?;
    let s4: Vec<_> = (0..m)
        .map(|i| axpy(&damp(&u[i], full(i)), h, &damp(&k3[i], half(i))))
        .collect();
    let k4 = rhs(&s4, t + h)?;

    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut next = damp(&u[i], full(i));
        next.add_assign_scaled(h / 6.0, &damp(&k1[i], full(i)));
        let mut mid = k2[i].clone();
        mid.add_assign_scaled(1.0, &k3[i]);
        next.add_assign_scaled(h / 3.0, &damp(&mid, half(i)));
        next.add_assign_scaled(h / 6.0, &k4[i]);
        if next.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::Blowup { t: t + h });
        }
        out.push(next);
    }
    Ok(out)
}

/// Step sizes covering `[0, t_end]` with nominal `dt`; the last step is
/// shortened when `t_end` is not a multiple of `dt`.
pub(crate) fn step_schedule(dt: f64, t_end: f64) -> Vec<f64> {
    let count = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut steps = vec![dt; count];
    let last = t_end - dt * (count - 1) as f64;
    steps[count - 1] = last;
    steps
}
