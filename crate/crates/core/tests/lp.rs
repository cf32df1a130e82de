mod common;

use blab_core::ensemble::{random_scalar, SpectrumSpec};
use blab_core::lp::{
    bernstein_check, besov_norm, build_partition, chi, dyadic_block, low_pass, phi, spacetime_besov,
    unity_sum,
};
use blab_core::spectral::lebesgue_norm;
use blab_core::{BesovIndex, BlockHistory, DyadicPartition, Field, Grid};
use common::{grid, Modes};
use proptest::prelude::*;

fn part(n: usize) -> DyadicPartition {
    build_partition(&grid(n)).unwrap()
}

fn rand_field(n: usize, seed: u64) -> Field {
    random_scalar(&grid(n), SpectrumSpec::new(-1.0), seed)
}

/// `min_k sqrt(sum_q w_q(k)^2)` over the lattice, the lower factor relating
/// the `B^0_{2,2}` norm to the `L^2` norm (the upper factor is 1).
fn l2_factor(part: &DyadicPartition) -> f64 {
    let len = part.grid().spectral_len();
    (0..len)
        .map(|i| part.shells().map(|q| part.weights(q).unwrap()[i].powi(2)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

#[test]
fn q_max_on_standard_grids() {
    assert_eq!(part(64).q_max(), 3);
    // radii up to (2/3) * 32 reach 21.3 < 2^5, shells stop one below
    let cutoff = 2.0 / 3.0 * 32.0_f64;
    assert_eq!((cutoff.log2().floor() as i32) - 1, 3);
    assert_eq!(part(128).q_max(), 4);
    assert_eq!(part(256).q_max(), 5);
    assert_eq!(part(64).q_min(), -1);
}

#[test]
fn tiny_grid_is_rejected() {
    assert!(build_partition(&Grid::standard(8).unwrap()).is_err());
    assert!(build_partition(&Grid::standard(16).unwrap()).is_ok());
}

#[test]
fn profiles() {
    assert!((unity_sum(1.7) - 1.0).abs() < 1e-10);
    assert_eq!(chi(0.5), 1.0);
    assert_eq!(chi(1.5), 0.0);
    for i in 0..=4000 {
        let r = i as f64 * 0.01;
        assert!(phi(r) * phi(r / 4.0) == 0.0, "overlap at r = {r}");
        assert!((unity_sum(r) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn partition_of_unity_on_lattice() {
    for n in [64, 128, 256] {
        let p = part(n);
        let len = p.grid().spectral_len();
        let mut sum = vec![0.0; len];
        for q in p.shells() {
            for (s, w) in sum.iter_mut().zip(p.weights(q).unwrap()) {
                *s += w;
            }
        }
        assert!(sum.iter().all(|s| (s - 1.0).abs() <= 1e-10), "n = {n}");
    }
}

#[test]
fn almost_orthogonality_on_lattice() {
    let p = part(128);
    for j in p.shells() {
        for q in p.shells().filter(|q| (q - j).abs() >= 2) {
            let a = p.weights(j).unwrap();
            let b = p.weights(q).unwrap();
            assert!(a.iter().zip(b).all(|(x, y)| x * y == 0.0), "{j} {q}");
        }
    }
}

#[test]
fn dyadic_block_examples() {
    let p = part(64);
    // |k| = 6 lies in [4/3, 3/2] * 2^2 where phi(2^-2 .) = 1
    let f = Modes::cos(1.0, 0, 6).field(grid(64));
    assert!(dyadic_block(&f, 2, &p).unwrap().max_diff(&f) < 1e-13);
    assert!(dyadic_block(&Field::constant(grid(64), 2.0), 0, &p).unwrap().max_abs() < 1e-15);
    let g = rand_field(64, 11);
    let sum = p
        .shells()
        .map(|q| dyadic_block(&g, q, &p).unwrap())
        .fold(Field::zeros(grid(64)), |a, b| &a + &b);
    assert!(sum.max_diff(&g) <= 1e-10 * g.max_abs());
    assert!(dyadic_block(&g, 4, &p).is_err());
    assert!(dyadic_block(&g, -2, &p).is_err());
}

#[test]
fn low_pass_examples() {
    let p = part(64);
    let g = rand_field(64, 12);
    assert!(low_pass(&g, p.q_max() + 1, &p).unwrap().max_diff(&g) <= 1e-10 * g.max_abs());
    assert!(low_pass(&g, 0, &p).unwrap().max_diff(&dyadic_block(&g, -1, &p).unwrap()) < 1e-14);
    let c = Field::constant(grid(64), -1.25);
    for q in 0..=p.q_max() + 1 {
        assert!(low_pass(&c, q, &p).unwrap().max_diff(&c) < 1e-14);
    }
    assert!(low_pass(&g, p.q_max() + 2, &p).is_err());
}

#[test]
fn besov_examples() {
    let p = part(64);
    let idx = BesovIndex::new(0.0, f64::INFINITY, 1.0).unwrap();
    assert_eq!(besov_norm(&Field::zeros(grid(64)), idx, &p).unwrap(), 0.0);
    // |k| = 1 sits in the transition of chi, shells -1 and 0 share it
    let shares = chi(1.0) + phi(1.0);
    assert!((shares - 1.0).abs() < 1e-15);
    let s = Modes::sin(1.0, 1, 0).field(grid(64));
    assert!((besov_norm(&s, idx, &p).unwrap() - 1.0).abs() < 2e-3);
    let l2 = BesovIndex::new(0.0, f64::INFINITY, 2.0).unwrap();
    for seed in 0..50 {
        let f = rand_field(64, seed);
        assert!(besov_norm(&f, idx, &p).unwrap() >= besov_norm(&f, l2, &p).unwrap());
    }
}

#[test]
fn besov_022_against_l2_regression() {
    let p = part(64);
    let factor = l2_factor(&p);
    assert_eq!(format!("{factor:.4}"), "0.7091");
    let idx = BesovIndex::new(0.0, 2.0, 2.0).unwrap();
    for seed in 0..20 {
        let f = rand_field(64, 100 + seed);
        let ratio = besov_norm(&f, idx, &p).unwrap() / lebesgue_norm(&f, 2.0).unwrap();
        assert!(ratio >= factor - 1e-12 && ratio <= 1.0 + 1e-12, "{ratio}");
    }
}

#[test]
fn bernstein_examples() {
    let p = part(64);
    for q in 0..=2 {
        let k = 2f64.powi(q);
        let f = Field::from_fn(grid(64), |x, _| (k * x).sin()).unwrap();
        let r = bernstein_check(&f, q, 1, f64::INFINITY, f64::INFINITY, &p).unwrap();
        assert!((r.block_ratio.unwrap() - 1.0).abs() < 1e-2, "q = {q}");
    }
    let c = Field::constant(grid(64), 1.0);
    assert!(bernstein_check(&c, 0, 1, 2.0, f64::INFINITY, &p).unwrap().is_degenerate());
    let f = rand_field(64, 1);
    assert!(bernstein_check(&f, 1, 1, 3.0, 2.0, &p).is_err());
    assert!(bernstein_check(&f, 9, 1, 2.0, 2.0, &p).is_err());
}

fn random_history(seed: u64, steps: usize, p_exp: f64) -> BlockHistory {
    let pt = part(32);
    let mut h = BlockHistory::new(p_exp);
    for i in 0..steps {
        let f = random_scalar(&grid(32), SpectrumSpec::new(-1.0), seed * 31 + i as u64);
        h.record(0.1 * i as f64 + 0.05 * (seed % 3) as f64 * i as f64, &f, &pt).unwrap();
    }
    h
}

#[test]
fn spacetime_constant_history() {
    let pt = part(32);
    let f = rand_field(32, 5);
    let mut h = BlockHistory::new(4.0);
    for i in 0..=10 {
        h.record(0.3 * i as f64, &f, &pt).unwrap();
    }
    let t: f64 = 3.0;
    for (s, r, rho) in [(0.0, 2.0, 2.0), (0.5, 1.0, 3.0), (-0.3, f64::INFINITY, 1.0)] {
        let idx = BesovIndex::new(s, 4.0, r).unwrap();
        let want = t.powf(1.0 / rho) * besov_norm(&f, idx, &pt).unwrap();
        for tilde in [true, false] {
            let got = spacetime_besov(&h, idx, rho, tilde).unwrap();
            assert!((got - want).abs() <= 1e-12 * want, "{s} {r} {rho} {tilde}");
        }
    }
}

#[test]
fn spacetime_orderings() {
    for seed in 0..20 {
        let h = random_history(seed, 2, f64::INFINITY);
        let fubini = BesovIndex::new(0.3, f64::INFINITY, 1.0).unwrap();
        let a = spacetime_besov(&h, fubini, 1.0, true).unwrap();
        let b = spacetime_besov(&h, fubini, 1.0, false).unwrap();
        assert!((a - b).abs() <= 1e-12 * a);
        let idx = BesovIndex::new(0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let tilde = spacetime_besov(&h, idx, 1.0, true).unwrap();
        let plain = spacetime_besov(&h, idx, 1.0, false).unwrap();
        assert!(tilde >= plain * (1.0 - 1e-14), "seed {seed}: {tilde} < {plain}");
    }
}

#[test]
fn spacetime_rejections() {
    let idx = BesovIndex::new(0.0, 2.0, 2.0).unwrap();
    assert!(spacetime_besov(&BlockHistory::new(2.0), idx, 1.0, true).is_err());
    let h = random_history(1, 3, 4.0);
    assert!(spacetime_besov(&h, idx, 1.0, true).is_err());
    let mut h = BlockHistory::new(2.0);
    h.push(1.0, vec![1.0, 2.0]).unwrap();
    assert!(h.push(1.0, vec![1.0, 2.0]).is_err());
    assert!(h.push(2.0, vec![1.0]).is_err());
    assert!(BesovIndex::new(0.0, 0.5, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reconstruction(seed in 0u64..100_000, slope in -3.0f64..0.0) {
        let p = part(64);
        let f = random_scalar(&grid(64), SpectrumSpec::new(slope), seed);
        let sum = p.blocks(&f).unwrap().iter().fold(Field::zeros(grid(64)), |a, b| &a + b);
        prop_assert!(sum.max_diff(&f) <= 1e-10 * f.max_abs());
    }

    #[test]
    fn tilde_dominates_when_r_at_least_rho(seed in 0u64..10_000, rho in 1.0f64..3.0, extra in 0.0f64..3.0) {
        let h = random_history(seed, 4, 2.0);
        let idx = BesovIndex::new(0.2, 2.0, rho + extra).unwrap();
        let tilde = spacetime_besov(&h, idx, rho, true).unwrap();
        let plain = spacetime_besov(&h, idx, rho, false).unwrap();
        prop_assert!(tilde >= plain * (1.0 - 1e-12));
    }

    #[test]
    fn rho_equals_r_flags_agree(seed in 0u64..10_000, r in 1.0f64..4.0) {
        let h = random_history(seed, 3, f64::INFINITY);
        let idx = BesovIndex::new(-0.4, f64::INFINITY, r).unwrap();
        let a = spacetime_besov(&h, idx, r, true).unwrap();
        let b = spacetime_besov(&h, idx, r, false).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}
