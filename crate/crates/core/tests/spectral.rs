mod common;

use std::f64::consts::PI;

use blab_core::ensemble::{random_scalar, random_velocity, SpectrumSpec};
use blab_core::spectral::{
    biot_savart, curl, fractional_laplacian, lebesgue_norm, leray_project, partial_derivative,
    riesz_transform,
};
use blab_core::{Axis, Field, VectorField};
use common::{grid, rel_diff, Modes};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn f(n: usize, h: impl Fn(f64, f64) -> f64) -> Field {
    Field::from_fn(grid(n), h).unwrap()
}

#[test]
fn fractional_laplacian_examples() {
    let s = f(64, |x, _| x.sin());
    assert!(rel_diff(&fractional_laplacian(&s, 1.0).unwrap(), &s, 1.0) < TOL);
    let c = Field::constant(grid(64), 3.5);
    assert!(fractional_laplacian(&c, 1.0).unwrap().max_abs() < TOL);
    let g = f(64, |_, y| (2.0 * y).cos());
    let want = g.scaled(2f64.sqrt());
    assert!(rel_diff(&fractional_laplacian(&g, 0.5).unwrap(), &want, 1.0) < TOL);
}

#[test]
fn riesz_examples() {
    let out = riesz_transform(&f(64, |x, _| x.sin())).unwrap();
    assert!(rel_diff(&out, &f(64, |x, _| x.cos()), 1.0) < TOL);
    assert!(riesz_transform(&f(64, |_, y| y.sin())).unwrap().max_abs() < TOL);
    let out = riesz_transform(&f(64, |x, y| (x + y).cos())).unwrap();
    let want = f(64, |x, y| -(x + y).sin() / 2f64.sqrt());
    assert!(rel_diff(&out, &want, 1.0) < TOL);
}

#[test]
fn biot_savart_examples() {
    let v = biot_savart(&f(64, |x, _| x.sin())).unwrap();
    assert!(v.u1().max_abs() < TOL);
    assert!(rel_diff(v.u2(), &f(64, |x, _| -x.cos()), 1.0) < TOL);
    let z = biot_savart(&Field::zeros(grid(64))).unwrap();
    assert_eq!(z.max_norm(), 0.0);
    let v = biot_savart(&f(64, |_, y| y.cos())).unwrap();
    assert!(rel_diff(v.u1(), &f(64, |_, y| -y.sin()), 1.0) < TOL);
    assert!(v.u2().max_abs() < TOL);
}

#[test]
fn leray_examples() {
    let g = grid(64);
    let grad = VectorField::new(f(64, |x, y| x.cos() * y.sin()), f(64, |x, y| x.sin() * y.cos())).unwrap();
    assert!(leray_project(&grad).unwrap().max_norm() < TOL);
    let shear = VectorField::new(f(64, |_, y| y.sin()), Field::zeros(g)).unwrap();
    let p = leray_project(&shear).unwrap();
    assert!(p.max_diff(&shear) < TOL);
    let u = VectorField::new(random_scalar(&g, SpectrumSpec::new(-2.0), 3), random_scalar(&g, SpectrumSpec::new(-2.0), 4)).unwrap();
    let once = leray_project(&u).unwrap();
    assert!(once.is_certified());
    assert!(leray_project(&once).unwrap().max_diff(&once) < TOL * once.max_norm());
}

#[test]
fn lebesgue_examples() {
    let one = Field::constant(grid(64), 1.0);
    assert!((lebesgue_norm(&one, 2.0).unwrap() - 2.0 * PI).abs() < 1e-12 * 2.0 * PI);
    let s = f(64, |x, _| x.sin());
    assert!((lebesgue_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-3);
    assert!((lebesgue_norm(&s, 2.0).unwrap() - 2f64.sqrt() * PI).abs() < 1e-12 * 5.0);
}

#[test]
fn partial_derivative_examples() {
    let s = f(64, |x, _| x.sin());
    assert!(rel_diff(&partial_derivative(&s, Axis::X1).unwrap(), &f(64, |x, _| x.cos()), 1.0) < TOL);
    assert!(partial_derivative(&s, Axis::X2).unwrap().max_abs() < TOL);
    let c = f(64, |x, _| (3.0 * x).cos());
    let want = f(64, |x, _| -3.0 * (3.0 * x).sin());
    assert!(rel_diff(&partial_derivative(&c, Axis::X1).unwrap(), &want, 1.0) < TOL);
}

#[test]
fn operators_match_sparse_oracle() {
    let m = Modes::sin(1.0, 2, -3).plus(&Modes::cos(0.7, 5, 1)).plus(&Modes::cos(-0.2, 0, 4));
    let g = grid(32);
    let field = m.field(g);
    assert!(rel_diff(&riesz_transform(&field).unwrap(), &m.riesz().field(g), 1.0) < TOL);
    assert!(rel_diff(&partial_derivative(&field, Axis::X2).unwrap(), &m.d2().field(g), 1.0) < TOL);
    let abs_d = m.radial(|r| r.powf(1.5));
    assert!(rel_diff(&fractional_laplacian(&field, 1.5).unwrap(), &abs_d.field(g), 1.0) < TOL);
}

#[test]
fn biot_savart_is_certified_and_inverts_curl() {
    let g = grid(64);
    for seed in 0..5 {
        let omega = random_scalar(&g, SpectrumSpec::new(-1.0), seed);
        let v = biot_savart(&omega).unwrap();
        assert!(v.is_certified());
        assert!(curl(&v).max_diff(&omega) < 1e-11);
    }
}

#[test]
fn rejects_non_finite_input() {
    let mut vals = vec![0.0; 64];
    vals[5] = f64::NAN;
    assert!(Field::new(grid(8), vals).is_err());
}

fn random_field(seed: u64) -> Field {
    random_scalar(&grid(32), SpectrumSpec::new(-1.5), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn abs_d_riesz_is_d1(seed in 0u64..10_000) {
        let f = random_field(seed);
        let lhs = riesz_transform(&fractional_laplacian(&f, 1.0).unwrap()).unwrap();
        let rhs = partial_derivative(&f, Axis::X1).unwrap();
        prop_assert!(rel_diff(&lhs, &rhs, 1e-300) < TOL);
    }

    #[test]
    fn parseval(seed in 0u64..10_000) {
        let f = random_field(seed);
        let l2 = lebesgue_norm(&f, 2.0).unwrap().powi(2);
        let spec = f.to_spectral().energy();
        prop_assert!((l2 - spec).abs() <= TOL * l2);
    }

    #[test]
    fn multipliers_are_linear(seed in 0u64..10_000, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let f = random_field(seed);
        let g = random_field(seed + 1);
        let combo = &f.scaled(a) + &g.scaled(b);
        let ops: [&dyn Fn(&Field) -> Field; 4] = [
            &|x| fractional_laplacian(x, 0.7).unwrap(),
            &|x| riesz_transform(x).unwrap(),
            &|x| partial_derivative(x, Axis::X2).unwrap(),
            &|x| biot_savart(x).unwrap().u1().clone(),
        ];
        for op in ops {
            let lhs = op(&combo);
            let rhs = &op(&f).scaled(a) + &op(&g).scaled(b);
            prop_assert!(rel_diff(&lhs, &rhs, 1e-300) < TOL);
        }
    }

    #[test]
    fn leray_output_is_certified(seed in 0u64..10_000) {
        let v = random_velocity(&grid(32), SpectrumSpec::new(-1.0), seed).unwrap();
        let w = VectorField::new(&v.u1().clone() + &random_field(seed), v.u2().clone()).unwrap();
        prop_assert!(leray_project(&w).unwrap().is_certified());
    }
}
