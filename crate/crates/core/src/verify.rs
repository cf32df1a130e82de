//! Fixed-seed ensembles for the commutator, convolution and Bernstein
//! estimates, and the resolution-stability summaries used to turn "a
//! constant exists" into a checkable statement.

use std::fmt;
use std::str::FromStr;

use crate::ensemble::{derive_seed, random_scalar, random_velocity, uniform, SpectrumSpec};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::lp::{bernstein_check, build_partition, dyadic_block};
use crate::paradiff::{
    check_commutator_lemma43, check_commutator_thm_part1, check_commutator_thm_part2,
    check_conv_commutator, check_generalized_bernstein, gaussian_kernel, InequalityReport,
    ReportMeta,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimate {
    /// Riesz commutator in `B^0_{p,r}`.
    Thm33Part1,
    /// Riesz commutator in `B^0_{inf,r}` with vorticity on the right.
    Thm33Part2,
    /// Dyadic-block commutator.
    Lemma43,
    /// Convolution commutator with constant 1.
    Lemma32,
    /// Lower bound `c 2^q ||theta_q||_p^p <= int (|D|theta_q)|theta_q|^{p-2}theta_q`.
    GenBernstein,
    /// Classical Bernstein inequality for `S_q`.
    Bernstein,
}

impl Estimate {
    pub const ALL: [Estimate; 6] = [
        Estimate::Thm33Part1,
        Estimate::Thm33Part2,
        Estimate::Lemma43,
        Estimate::Lemma32,
        Estimate::GenBernstein,
        Estimate::Bernstein,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Estimate::Thm33Part1 => "thm33p1",
            Estimate::Thm33Part2 => "thm33p2",
            Estimate::Lemma43 => "lemma43",
            Estimate::Lemma32 => "lemma32",
            Estimate::GenBernstein => "genbernstein",
            Estimate::Bernstein => "bernstein",
        }
    }

    /// Lower-bound estimates are judged by their minimum ratio.
    pub fn is_lower_bound(&self) -> bool {
        matches!(self, Estimate::GenBernstein)
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimate {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Estimate::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown estimate '{s}'")))
    }
}

/// Ensemble parameters. Exponents not used by an estimate are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSettings {
    pub estimate: Estimate,
    pub members: usize,
    pub seed: u64,
    pub slope: f64,
    pub p: f64,
    pub r: f64,
    pub rho: f64,
    pub epsilon: f64,
    /// Integrability of `g` in the convolution estimate.
    pub m: f64,
    /// Even exponent of the generalized Bernstein check.
    pub p_even: u32,
    /// Shells probed by the shell-wise Bernstein checks.
    pub shells: Vec<i32>,
}

impl EnsembleSettings {
    pub fn new(estimate: Estimate) -> Self {
        let (p, r) = match estimate {
            Estimate::Lemma32 => (f64::INFINITY, f64::INFINITY),
            Estimate::Bernstein => (2.0, f64::INFINITY),
            _ => (4.0, 2.0),
        };
        Self {
            estimate,
            members: 100,
            seed: 2024,
            slope: -2.0,
            p,
            r,
            rho: 2.0,
            epsilon: 0.5,
            m: f64::INFINITY,
            p_even: 4,
            shells: vec![0, 1, 2],
        }
    }
}

/// Runs one ensemble at resolution `n` (period `2 pi`). Reports come back
/// ordered by member, then shell.
pub fn run_ensemble(settings: &EnsembleSettings, n: usize) -> Result<Vec<InequalityReport>> {
    let grid = Grid::standard(n)?;
    let part = build_partition(&grid)?;
    let spec = SpectrumSpec::new(settings.slope);
    let mut out = Vec::new();
    for member in 0..settings.members {
        let seed = derive_seed(settings.seed, &[member as u64]);
        let meta = ReportMeta {
            seed: Some(seed),
            n,
            slope: Some(settings.slope),
            shell: None,
        };
        match settings.estimate {
            Estimate::Thm33Part1 => {
                let v = random_velocity(&grid, spec, derive_seed(seed, &[1]))?;
                let theta = random_scalar(&grid, spec, derive_seed(seed, &[2]));
                out.push(
                    check_commutator_thm_part1(&v, &theta, settings.p, settings.r, &part)?
                        .with_meta(meta),
                );
            }
            Estimate::Thm33Part2 => {
                let v = random_velocity(&grid, spec, derive_seed(seed, &[1]))?;
                let theta = random_scalar(&grid, spec, derive_seed(seed, &[2]));
                out.push(
                    check_commutator_thm_part2(
                        &v,
                        &theta,
                        settings.rho,
                        settings.epsilon,
                        settings.r,
                        &part,
                    )?
                    .with_meta(meta),
                );
            }
            Estimate::Lemma43 => {
                let v = random_velocity(&grid, spec, derive_seed(seed, &[1]))?;
                let theta = random_scalar(&grid, spec, derive_seed(seed, &[2]));
                let reports = check_commutator_lemma43(&v, &theta, settings.p, &part)?;
                for r in reports.shells {
                    let shell = r.meta.shell;
                    out.push(r.with_meta(ReportMeta { shell, ..meta.clone() }));
                }
            }
            Estimate::Lemma32 => {
                let smooth = SpectrumSpec::band_limited(settings.slope.min(-2.0), 4.0);
                let f = random_scalar(&grid, smooth, derive_seed(seed, &[1]));
                let g = random_scalar(&grid, smooth, derive_seed(seed, &[2]));
                let period = grid.period();
                let width = period / 32.0 * (1.0 + uniform(seed, &[3]));
                let angle = 2.0 * std::f64::consts::PI * uniform(seed, &[4]);
                let offset = width * uniform(seed, &[5]);
                let h = gaussian_kernel(grid, width, (offset * angle.cos(), offset * angle.sin()))?;
                out.push(check_conv_commutator(&h, &f, &g, settings.p, settings.m)?.with_meta(meta));
            }
            Estimate::GenBernstein => {
                let theta = random_scalar(&grid, spec, derive_seed(seed, &[2]));
                for &q in &settings.shells {
                    let block = dyadic_block(&theta, q, &part)?;
                    let r = check_generalized_bernstein(&block, q, settings.p_even)?;
                    out.push(r.with_meta(ReportMeta {
                        shell: Some(q),
                        ..meta.clone()
                    }));
                }
            }
            Estimate::Bernstein => {
                let f = random_scalar(&grid, spec, derive_seed(seed, &[2]));
                for &q in &settings.shells {
                    let b = bernstein_check(&f, q, 1, settings.p, settings.r.max(settings.p), &part)?;
                    let mut r = InequalityReport::new(
                        "bernstein",
                        b.low_pass_lhs,
                        vec![("2^{q(k+2(1/a-1/b))}||S_q f||_a".into(), b.low_pass_rhs)],
                        meta.clone(),
                    );
                    if b.low_pass_ratio.is_none() {
                        r.ratio = None;
                    }
                    r.meta.shell = Some(q);
                    out.push(r);
                }
            }
        }
    }
    Ok(out)
}

/// Extremes of one ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSummary {
    pub estimate: Estimate,
    pub n: usize,
    pub reports: usize,
    pub degenerate: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
}

impl EnsembleSummary {
    pub fn all_finite(&self) -> bool {
        self.max_ratio.is_finite() && self.min_ratio.is_finite()
    }

    /// The extreme that characterizes the estimate's constant.
    pub fn extreme(&self) -> f64 {
        if self.estimate.is_lower_bound() {
            self.min_ratio
        } else {
            self.max_ratio
        }
    }
}

pub fn summarize(estimate: Estimate, n: usize, reports: &[InequalityReport]) -> EnsembleSummary {
    let ratios: Vec<f64> = reports.iter().filter_map(|r| r.ratio).collect();
    EnsembleSummary {
        estimate,
        n,
        reports: reports.len(),
        degenerate: reports.len() - ratios.len(),
        max_ratio: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// `max(a/b, b/a)` of the characteristic extremes of two ensembles.
pub fn resolution_drift(a: &EnsembleSummary, b: &EnsembleSummary) -> f64 {
    let (x, y) = (a.extreme(), b.extreme());
    if x > 0.0 && y > 0.0 {
        (x / y).max(y / x)
    } else {
        f64::INFINITY
    }
}
