//! Fourier-multiplier operators on the torus.
//!
//! Every `1/|k|`-type multiplier maps the zero mode to zero. Odd
//! multipliers use the derivative wave vector [`Wave::d1`]/[`Wave::d2`],
//! which vanishes on the corresponding Nyquist line; this keeps the outputs
//! real and makes identities such as `|D| R = d/dx1` hold exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, VectorField};
use crate::grid::Wave;

/// Coordinate axis of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "dissipation exponent must lie in (0, 2], got {alpha}"
        )))
    }
}

/// Symbol `|xi|^alpha` of `|D|^alpha`.
pub fn abs_d_symbol(w: &Wave, alpha: f64) -> f64 {
    if w.is_zero() {
        0.0
    } else if alpha == 1.0 {
        w.norm
    } else if alpha == 2.0 {
        w.norm * w.norm
    } else {
        w.norm.powf(alpha)
    }
}

pub fn abs_d_spectral(s: &SpectralField, alpha: f64) -> SpectralField {
    s.multiply_real(|w| abs_d_symbol(w, alpha))
}

pub fn riesz_spectral(s: &SpectralField) -> SpectralField {
    s.multiply(|w| {
        if w.is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, w.d1 / w.norm)
        }
    })
}

pub fn derivative_spectral(s: &SpectralField, axis: Axis) -> SpectralField {
    match axis {
        Axis::X1 => s.multiply(|w| Complex64::new(0.0, w.d1)),
        Axis::X2 => s.multiply(|w| Complex64::new(0.0, w.d2)),
    }
}

/// Velocity `(-d2 psi, d1 psi)` with `Lap psi = omega`, in spectral form.
pub fn biot_savart_spectral(omega: &SpectralField) -> (SpectralField, SpectralField) {
    let inv = |w: &Wave| {
        let d = w.d_norm_sqr();
        if d == 0.0 {
            0.0
        } else {
            1.0 / d
        }
    };
    // psi_hat = -omega_hat / |d|^2 ; v1 = -i d2 psi ; v2 = i d1 psi
    let u1 = omega.multiply(|w| Complex64::new(0.0, w.d2 * inv(w)));
    let u2 = omega.multiply(|w| Complex64::new(0.0, -w.d1 * inv(w)));
    (u1, u2)
}

/// `F(|D|^alpha f)(k) = |k|^alpha F f(k)`.
pub fn fractional_laplacian(f: &Field, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    f.ensure_finite()?;
    Ok(abs_d_spectral(&f.to_spectral(), alpha).to_field())
}

/// Riesz transform `R = d1 / |D|`, multiplier `i k1 / |k|`.
pub fn riesz_transform(f: &Field) -> Result<Field> {
    f.ensure_finite()?;
    Ok(riesz_spectral(&f.to_spectral()).to_field())
}

pub fn partial_derivative(f: &Field, axis: Axis) -> Result<Field> {
    f.ensure_finite()?;
    Ok(derivative_spectral(&f.to_spectral(), axis).to_field())
}

/// Velocity with curl `omega - mean(omega)` and zero mean.
pub fn biot_savart(omega: &Field) -> Result<VectorField> {
    omega.ensure_finite()?;
    let (u1, u2) = biot_savart_spectral(&omega.to_spectral());
    VectorField::divergence_free(u1.to_field(), u2.to_field())
}

/// Orthogonal projection onto divergence-free fields. The zero mode passes
/// through unchanged.
pub fn leray_project(u: &VectorField) -> Result<VectorField> {
    u.u1().ensure_finite()?;
    u.u2().ensure_finite()?;
    let a = u.u1().to_spectral();
    let b = u.u2().to_spectral();
    let n = a.grid().n();
    let mut p1 = a.clone();
    let mut p2 = b.clone();
    for idx in 0..a.coeffs().len() {
        let w = a.grid().wave(idx);
        let d = w.d_norm_sqr();
        if d == 0.0 {
            continue;
        }
        let (x, y) = (a.coeffs()[idx], b.coeffs()[idx]);
        let dot = (x * w.d1 + y * w.d2) / d;
        p1.coeffs_mut()[idx] = x - dot * w.d1;
        p2.coeffs_mut()[idx] = y - dot * w.d2;
    }
    debug_assert_eq!(p1.coeffs().len(), n * (n / 2 + 1));
    VectorField::divergence_free(p1.to_field(), p2.to_field())
}

/// `curl v = d1 v2 - d2 v1`.
pub fn curl(v: &VectorField) -> Field {
    let mut a = derivative_spectral(&v.u2().to_spectral(), Axis::X1);
    let b = derivative_spectral(&v.u1().to_spectral(), Axis::X2);
    a.add_assign_scaled(-1.0, &b);
    a.to_field()
}

/// Discrete `L^p` norm: `(h^2 sum |f|^p)^(1/p)`, grid maximum for `p = inf`.
pub fn lebesgue_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidParameter(format!("L^p exponent must be >= 1, got {p}")));
    }
    f.ensure_finite()?;
    Ok(lp_norm_of(f.values(), f.grid().cell_area(), p))
}

pub(crate) fn lp_norm_of(values: &[f64], cell_area: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if p.fract() == 0.0 && p <= 16.0 {
        let k = p as i32;
        values.iter().map(|v| v.abs().powi(k)).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (cell_area * sum).powf(1.0 / p)
}

/// `L^p` norm of the pointwise Euclidean magnitude of a vector field.
pub fn vector_norm(v: &VectorField, p: f64) -> Result<f64> {
    lebesgue_norm(&v.magnitude(), p)
}

/// Pointwise Frobenius norm of the velocity gradient `(d_j v^i)`.
pub fn velocity_gradient_magnitude(v: &VectorField) -> Field {
    let a = v.u1().to_spectral();
    let b = v.u2().to_spectral();
    let parts = [
        derivative_spectral(&a, Axis::X1).to_field(),
        derivative_spectral(&a, Axis::X2).to_field(),
        derivative_spectral(&b, Axis::X1).to_field(),
        derivative_spectral(&b, Axis::X2).to_field(),
    ];
    let values = (0..a.grid().len())
        .map(|i| parts.iter().map(|f| f.values()[i].powi(2)).sum::<f64>().sqrt())
        .collect();
    Field::from_raw(*a.grid(), values)
}

/// `||grad v||_{L^p}` with the Frobenius norm pointwise.
pub fn velocity_gradient_norm(v: &VectorField, p: f64) -> Result<f64> {
    lebesgue_norm(&velocity_gradient_magnitude(v), p)
}

/// Pointwise Euclidean magnitude of `grad f`.
pub fn gradient_magnitude(f: &Field) -> Field {
    let s = f.to_spectral();
    let a = derivative_spectral(&s, Axis::X1).to_field();
    let b = derivative_spectral(&s, Axis::X2).to_field();
    a.zip_map(&b, f64::hypot)
}
