//! Linear transport-diffusion `d_t theta + v . grad theta + |D|^alpha theta = f`
//! with prescribed velocity and forcing, and trajectory reports for the
//! maximum principle, the smoothing effect, the logarithmic estimate and
//! Besov propagation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, VectorField};
use crate::grid::Grid;
use crate::integrator::{lawson_rk4, step_schedule, Damping};
use crate::lp::{build_partition, lr_sum, spacetime_besov, trapezoid_weights, BesovIndex, BlockHistory, DyadicPartition};
use crate::paradiff::advection_spectral;
use crate::spectral::{curl, lebesgue_norm, velocity_gradient_norm};

/// Time-dependent field supplied by a closure.
pub type Source<T> = Arc<dyn Fn(f64) -> Result<T> + Send + Sync>;

/// Prescribed velocity or forcing.
#[derive(Clone)]
pub enum Prescribed<T> {
    Zero,
    Steady(T),
    /// Snapshots at strictly increasing times, interpolated linearly and
    /// held constant outside their span.
    Sequence(Vec<(f64, T)>),
    Analytic(Source<T>),
}

impl<T> std::fmt::Debug for Prescribed<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Prescribed::Zero => f.write_str("Zero"),
            Prescribed::Steady(_) => f.write_str("Steady"),
            Prescribed::Sequence(s) => write!(f, "Sequence({} snapshots)", s.len()),
            Prescribed::Analytic(_) => f.write_str("Analytic"),
        }
    }
}

/// Fields that can be blended between snapshots.
pub trait Blend: Clone {
    fn blend(a: &Self, b: &Self, w: f64) -> Self;
}

impl Blend for Field {
    fn blend(a: &Self, b: &Self, w: f64) -> Self {
        a.zip_map(b, |x, y| (1.0 - w) * x + w * y)
    }
}

impl Blend for VectorField {
    fn blend(a: &Self, b: &Self, w: f64) -> Self {
        let u1 = Field::blend(a.u1(), b.u1(), w);
        let u2 = Field::blend(a.u2(), b.u2(), w);
        if a.is_certified() && b.is_certified() {
            VectorField::certified_unchecked(u1, u2)
        } else {
            VectorField::new(u1, u2).expect("snapshots share a grid")
        }
    }
}

impl<T: Blend> Prescribed<T> {
    pub fn sequence(snapshots: Vec<(f64, T)>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::EmptyHistory);
        }
        if snapshots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidParameter("snapshot times must increase strictly".into()));
        }
        Ok(Prescribed::Sequence(snapshots))
    }

    pub fn analytic(f: impl Fn(f64) -> Result<T> + Send + Sync + 'static) -> Self {
        Prescribed::Analytic(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Prescribed::Zero)
    }

    /// Value at `t`; `None` for the zero source.
    pub fn at(&self, t: f64) -> Result<Option<T>> {
        Ok(match self {
            Prescribed::Zero => None,
            Prescribed::Steady(v) => Some(v.clone()),
            Prescribed::Sequence(s) => {
                let i = s.partition_point(|(ti, _)| *ti <= t);
                Some(if i == 0 {
                    s[0].1.clone()
                } else if i == s.len() {
                    s[i - 1].1.clone()
                } else {
                    let (t0, a) = &s[i - 1];
                    let (t1, b) = &s[i];
                    T::blend(a, b, (t - t0) / (t1 - t0))
                })
            }
            Prescribed::Analytic(f) => Some(f(t)?),
        })
    }
}

/// Solver and recording parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct TDConfig {
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// Histories are recorded every `stride` steps (and at the end).
    pub stride: usize,
    /// Snapshots are kept every `state_stride` steps; 0 keeps only the
    /// initial and final states.
    pub state_stride: usize,
    /// Exponents of the recorded `L^p` norms and block histories.
    pub p_list: Vec<f64>,
    /// `false` switches the `|D|^alpha` term off (pure transport).
    pub dissipation: bool,
}

impl TDConfig {
    pub fn new(alpha: f64, dt: f64, t_end: f64) -> Self {
        Self {
            alpha,
            dt,
            t_end,
            cfl_safety: 0.5,
            stride: 1,
            state_stride: 1,
            p_list: vec![2.0, f64::INFINITY],
            dissipation: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return bad(format!("alpha must lie in (0, 2], got {}", self.alpha));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be at least dt = {}", self.t_end, self.dt));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if self.stride == 0 {
            return bad("stride must be at least 1".into());
        }
        if let Some(p) = self.p_list.iter().find(|p| !(**p >= 1.0)) {
            return bad(format!("L^p exponents must be >= 1, got {p}"));
        }
        Ok(())
    }
}

/// Rejects `h` when `h > safety * spacing / max|v|`.
pub fn check_cfl(v: &VectorField, h: f64, safety: f64, t: f64) -> Result<()> {
    let vmax = v.max_norm();
    if vmax == 0.0 {
        return Ok(());
    }
    let limit = safety * v.grid().spacing() / vmax;
    if h > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl {
            t,
            max_velocity: vmax,
            dt: h,
            limit,
        });
    }
    Ok(())
}

fn require_certified(v: &VectorField) -> Result<()> {
    if v.is_certified() {
        Ok(())
    } else {
        Err(Error::NotDivergenceFree {
            divergence: v.divergence_magnitude(),
            magnitude: v.max_norm(),
        })
    }
}

struct Stepper<'a> {
    grid: Grid,
    velocity: &'a Prescribed<VectorField>,
    forcing: &'a Prescribed<Field>,
    damping: Damping,
    /// Dealiased velocity of a steady source.
    steady: Option<(Field, Field)>,
    safety: f64,
}

impl<'a> Stepper<'a> {
    fn new(
        grid: Grid,
        velocity: &'a Prescribed<VectorField>,
        forcing: &'a Prescribed<Field>,
        cfg: &TDConfig,
    ) -> Result<Self> {
        let steady = match velocity {
            Prescribed::Steady(v) => {
                if v.grid() != &grid {
                    return Err(Error::GridMismatch);
                }
                require_certified(v)?;
                Some((v.u1().dealiased(), v.u2().dealiased()))
            }
            _ => None,
        };
        Ok(Self {
            grid,
            velocity,
            forcing,
            damping: Damping::fractional(&grid, cfg.alpha, &[cfg.dissipation]),
            steady,
            safety: cfg.cfl_safety,
        })
    }

    fn velocity_at(&self, t: f64, h: f64) -> Result<Option<(Field, Field)>> {
        if let Some(v) = &self.steady {
            if let Prescribed::Steady(full) = self.velocity {
                check_cfl(full, h, self.safety, t)?;
            }
            return Ok(Some(v.clone()));
        }
        match self.velocity.at(t)? {
            None => Ok(None),
            Some(v) => {
                if v.grid() != &self.grid {
                    return Err(Error::GridMismatch);
                }
                require_certified(&v)?;
                check_cfl(&v, h, self.safety, t)?;
                Ok(Some((v.u1().dealiased(), v.u2().dealiased())))
            }
        }
    }

    fn forcing_at(&self, t: f64) -> Result<Option<SpectralField>> {
        match self.forcing.at(t)? {
            None => Ok(None),
            Some(f) => {
                if f.grid() != &self.grid {
                    return Err(Error::GridMismatch);
                }
                f.ensure_finite()?;
                Ok(Some(f.to_spectral()))
            }
        }
    }

    fn step(&mut self, theta: &SpectralField, t: f64, h: f64) -> Result<SpectralField> {
        let grid = self.grid;
        let this = &*self;
        let rhs = |u: &[SpectralField], s: f64| -> Result<Vec<SpectralField>> {
            let mut out = match this.velocity_at(s, h)? {
                Some((v1, v2)) => {
                    let mut a = advection_spectral(&v1, &v2, &u[0]);
                    for c in a.coeffs_mut() {
                        *c = -*c;
                    }
                    a
                }
                None => SpectralField::zeros(grid),
            };
            if let Some(f) = this.forcing_at(s)? {
                out.add_assign_scaled(1.0, &f);
            }
            Ok(vec![out])
        };
        let mut damping = self.damping.clone();
        let next = lawson_rk4(std::slice::from_ref(theta), t, h, &mut damping, rhs)?;
        self.damping = damping;
        Ok(next.into_iter().next().unwrap())
    }
}

/// One IF-RK4 step of size `cfg.dt` from time `t`.
pub fn td_step(
    theta: &Field,
    t: f64,
    velocity: &Prescribed<VectorField>,
    forcing: &Prescribed<Field>,
    cfg: &TDConfig,
) -> Result<Field> {
    cfg.validate()?;
    theta.ensure_finite()?;
    let mut stepper = Stepper::new(*theta.grid(), velocity, forcing, cfg)?;
    Ok(stepper.step(&theta.to_spectral(), t, cfg.dt)?.to_field())
}

/// Sampled `L^p` norms, one row per recorded time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormHistory {
    pub p_list: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl NormHistory {
    pub fn new(p_list: &[f64]) -> Self {
        Self {
            p_list: p_list.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        self.times.push(t);
        self.values.push(row);
    }

    pub fn series(&self, p: f64) -> Result<Vec<f64>> {
        let j = self
            .p_list
            .iter()
            .position(|&x| x == p)
            .ok_or_else(|| Error::InvalidParameter(format!("L^{p} was not recorded")))?;
        Ok(self.values.iter().map(|r| r[j]).collect())
    }
}

/// Velocity diagnostics along a trajectory.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VelocityHistory {
    pub times: Vec<f64>,
    /// `||grad v(t)||_{L^inf}`.
    pub grad_inf: Vec<f64>,
    /// `||omega(t)||_{L^p}` for the trajectory's `p_list`.
    pub omega: NormHistory,
}

impl VelocityHistory {
    /// `V(t) = int_0^t ||grad v||_{L^inf}` at the final time.
    pub fn lipschitz_integral(&self) -> f64 {
        integrate(&self.times, &self.grad_inf)
    }
}

fn integrate(times: &[f64], values: &[f64]) -> f64 {
    trapezoid_weights(times).iter().zip(values).map(|(w, v)| w * v).sum()
}

/// Output of [`run_td`].
#[derive(Clone, Debug)]
pub struct TDTrajectory {
    pub grid: Grid,
    pub config: TDConfig,
    pub states: Vec<(f64, Field)>,
    /// One block history of `theta` per entry of `config.p_list`.
    pub block_history: Vec<BlockHistory>,
    pub norm_history: NormHistory,
    pub forcing_blocks: Vec<BlockHistory>,
    pub forcing_norms: NormHistory,
    pub velocity: VelocityHistory,
}

impl TDTrajectory {
    fn p_index(&self, p: f64) -> Result<usize> {
        self.config
            .p_list
            .iter()
            .position(|&x| x == p)
            .ok_or_else(|| Error::InvalidParameter(format!("L^{p} was not recorded")))
    }

    pub fn blocks(&self, p: f64) -> Result<&BlockHistory> {
        Ok(&self.block_history[self.p_index(p)?])
    }

    pub fn final_state(&self) -> &Field {
        &self.states.last().unwrap().1
    }
}

struct Recorder {
    part: DyadicPartition,
    traj: TDTrajectory,
}

impl Recorder {
    fn record(
        &mut self,
        t: f64,
        theta: &SpectralField,
        v: Option<VectorField>,
        f: Option<Field>,
    ) -> Result<()> {
        let p_list = self.traj.config.p_list.clone();
        let grid = self.traj.grid;
        let blocks = self.part.blocks_of_spectral(theta)?;
        let field = theta.to_field();
        if field.ensure_finite().is_err() {
            return Err(Error::Blowup { t });
        }
        let mut row = Vec::new();
        for (k, &p) in p_list.iter().enumerate() {
            let norms = blocks.iter().map(|b| lebesgue_norm(b, p)).collect::<Result<Vec<_>>>()?;
            self.traj.block_history[k].push(t, norms)?;
            row.push(lebesgue_norm(&field, p)?);
        }
        self.traj.norm_history.push(t, row);

        let f = f.unwrap_or_else(|| Field::zeros(grid));
        let fb = self.part.blocks(&f)?;
        let mut row = Vec::new();
        for (k, &p) in p_list.iter().enumerate() {
            let norms = fb.iter().map(|b| lebesgue_norm(b, p)).collect::<Result<Vec<_>>>()?;
            self.traj.forcing_blocks[k].push(t, norms)?;
            row.push(lebesgue_norm(&f, p)?);
        }
        self.traj.forcing_norms.push(t, row);

        let vh = &mut self.traj.velocity;
        vh.times.push(t);
        match v {
            Some(v) => {
                vh.grad_inf.push(velocity_gradient_norm(&v, f64::INFINITY)?);
                let omega = curl(&v);
                let row = p_list.iter().map(|&p| lebesgue_norm(&omega, p)).collect::<Result<_>>()?;
                vh.omega.push(t, row);
            }
            None => {
                vh.grad_inf.push(0.0);
                vh.omega.push(t, vec![0.0; p_list.len()]);
            }
        }
        Ok(())
    }
}

/// Integrates from `theta0` at `t = 0` to `cfg.t_end`.
pub fn run_td(
    theta0: &Field,
    velocity: &Prescribed<VectorField>,
    forcing: &Prescribed<Field>,
    cfg: &TDConfig,
) -> Result<TDTrajectory> {
    cfg.validate()?;
    theta0.ensure_finite()?;
    let grid = *theta0.grid();
    let part = build_partition(&grid)?;
    let hist = |p_list: &[f64]| p_list.iter().map(|&p| BlockHistory::new(p)).collect::<Vec<_>>();
    let mut rec = Recorder {
        part,
        traj: TDTrajectory {
            grid,
            config: cfg.clone(),
            states: vec![(0.0, theta0.clone())],
            block_history: hist(&cfg.p_list),
            norm_history: NormHistory::new(&cfg.p_list),
            forcing_blocks: hist(&cfg.p_list),
            forcing_norms: NormHistory::new(&cfg.p_list),
            velocity: VelocityHistory {
                omega: NormHistory::new(&cfg.p_list),
                ..VelocityHistory::default()
            },
        },
    };
    let mut stepper = Stepper::new(grid, velocity, forcing, cfg)?;
    let mut theta = theta0.to_spectral();
    rec.record(0.0, &theta, velocity.at(0.0)?, forcing.at(0.0)?)?;

    let steps = step_schedule(cfg.dt, cfg.t_end);
    let mut t = 0.0;
    for (i, &h) in steps.iter().enumerate() {
        theta = stepper.step(&theta, t, h)?;
        t = if i + 1 == steps.len() { cfg.t_end } else { t + h };
        let done = i + 1 == steps.len();
        if (i + 1) % cfg.stride == 0 || done {
            rec.record(t, &theta, velocity.at(t)?, forcing.at(t)?)?;
        }
        if done || (cfg.state_stride > 0 && (i + 1) % cfg.state_stride == 0) {
            rec.traj.states.push((t, theta.to_field()));
        }
    }
    Ok(rec.traj)
}

/// Maximum-principle check `||theta(t)||_p <= ||theta0||_p + int_0^t ||f||_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxPrincipleReport {
    pub p: f64,
    /// `||theta(t)||_p - ||theta0||_p - int_0^t ||f||_p` per recorded time.
    pub margins: Vec<(f64, f64)>,
    pub worst_margin: f64,
    pub tolerance: f64,
    /// Largest step-to-step increase of `||theta||_p`, relative to
    /// `||theta0||_p` (meaningful when `f = 0`).
    pub worst_increase: f64,
}

impl MaxPrincipleReport {
    pub fn holds(&self) -> bool {
        self.worst_margin <= self.tolerance
    }
}

pub fn report_max_principle(traj: &TDTrajectory, p: f64) -> Result<MaxPrincipleReport> {
    let norms = traj.norm_history.series(p)?;
    let fnorms = traj.forcing_norms.series(p)?;
    let times = &traj.norm_history.times;
    let n0 = norms[0];
    let mut integral = 0.0;
    let mut margins = vec![(times[0], 0.0)];
    for i in 1..times.len() {
        integral += 0.5 * (times[i] - times[i - 1]) * (fnorms[i] + fnorms[i - 1]);
        margins.push((times[i], norms[i] - n0 - integral));
    }
    // trapezoid error estimate from second differences
    let slack: f64 = fnorms
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
        .sum::<f64>()
        * traj.config.dt
        / 12.0;
    let scale = if n0 > 0.0 { n0 } else { 1.0 };
    let worst_increase = norms
        .windows(2)
        .map(|w| (w[1] - w[0]) / scale)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MaxPrincipleReport {
        p,
        worst_margin: margins.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max),
        margins,
        tolerance: 1e-6 * (n0 + integral) + slack,
        worst_increase,
    })
}

/// `sup_{q >= 0} 2^q ||Delta_q theta||_{L^1_t L^p}` against
/// `||theta0||_p + ||theta0||_inf ||omega||_{L^1_t L^p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingReport {
    pub p: f64,
    pub lhs: f64,
    pub theta0_lp: f64,
    pub theta0_linf: f64,
    pub omega_l1_lp: f64,
    pub bracket: f64,
    /// `lhs / bracket`; `None` when both vanish.
    pub constant: Option<f64>,
    /// `false` when `alpha != 1`.
    pub in_hypothesis: bool,
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs > 0.0 {
        Some(lhs / rhs)
    } else if lhs == 0.0 {
        None
    } else {
        Some(f64::INFINITY)
    }
}

pub fn report_smoothing_effect(traj: &TDTrajectory, p: f64) -> Result<SmoothingReport> {
    if traj.config.stride != 1 {
        return Err(Error::Hypothesis(format!(
            "smoothing-effect reports need every step recorded (stride = {})",
            traj.config.stride
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Hypothesis(format!("p must lie in [1, inf), got {p}")));
    }
    let hist = traj.blocks(p)?;
    let times = hist.times();
    let shells = hist.norms()[0].len();
    let lhs = (1..shells)
        .map(|i| {
            let series: Vec<f64> = hist.norms().iter().map(|r| r[i]).collect();
            2f64.powi(i as i32 - 1) * integrate(times, &series)
        })
        .fold(0.0, f64::max);
    let theta0 = &traj.states[0].1;
    let theta0_lp = lebesgue_norm(theta0, p)?;
    let theta0_linf = lebesgue_norm(theta0, f64::INFINITY)?;
    let omega_l1_lp = integrate(&traj.velocity.times, &traj.velocity.omega.series(p)?);
    let bracket = theta0_lp + theta0_linf * omega_l1_lp;
    Ok(SmoothingReport {
        p,
        lhs,
        theta0_lp,
        theta0_linf,
        omega_l1_lp,
        bracket,
        constant: ratio(lhs, bracket),
        in_hypothesis: traj.config.alpha == 1.0,
    })
}

/// Logarithmic estimate in `B^0_{p,1}` with the exponential-growth
/// contrast.
#[derive(Clone, Debug, PartialEq)]
pub struct LogEstimateReport {
    pub p: f64,
    /// `||theta||_{tilde L^inf_t B^0_{p,1}}`.
    pub lhs: f64,
    pub theta0_besov: f64,
    /// `||f||_{L^1_t B^0_{p,1}}`.
    pub forcing: f64,
    /// `V(t) = int_0^t ||grad v||_inf`.
    pub lipschitz_integral: f64,
    /// `lhs / ((theta0 + forcing)(1 + V))`.
    pub ratio: Option<f64>,
    /// `lhs / ((theta0 + forcing) e^V)`.
    pub contrast_ratio: Option<f64>,
    /// `N = floor(2 C V / log 2) + 1` of the shell-split argument.
    pub split_n: u64,
    /// `2^{-N/2} e^{C V} + N`.
    pub split_factor: f64,
}

/// Constant `C` in the shell-split diagnostic.
pub const SPLIT_CONSTANT: f64 = 1.0;

pub fn report_log_estimate(traj: &TDTrajectory, p: f64) -> Result<LogEstimateReport> {
    let idx = BesovIndex::new(0.0, p, 1.0)?;
    let hist = traj.blocks(p)?;
    let lhs = spacetime_besov(hist, idx, f64::INFINITY, true)?;
    let theta0_besov = lr_sum(hist.norms()[0].iter().copied(), 1.0);
    let forcing = spacetime_besov(&traj.forcing_blocks[traj.p_index(p)?], idx, 1.0, false)?;
    let v = traj.velocity.lipschitz_integral();
    let data = theta0_besov + forcing;
    let split_n = (2.0 * SPLIT_CONSTANT * v / std::f64::consts::LN_2).floor() as u64 + 1;
    Ok(LogEstimateReport {
        p,
        lhs,
        theta0_besov,
        forcing,
        lipschitz_integral: v,
        ratio: ratio(lhs, data * (1.0 + v)),
        contrast_ratio: ratio(lhs, data * v.exp()),
        split_n,
        split_factor: 2f64.powf(-(split_n as f64) / 2.0) * (SPLIT_CONSTANT * v).exp() + split_n as f64,
    })
}

/// Besov propagation `||theta||_{tilde L^inf B^s_{p,r}} <= C e^{C V} (...)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationReport {
    pub index: BesovIndex,
    pub lhs: f64,
    pub theta0_besov: f64,
    pub forcing: f64,
    pub lipschitz_integral: f64,
    /// `lhs / (e^V (theta0 + forcing))`.
    pub ratio: Option<f64>,
}

pub fn report_besov_propagation(traj: &TDTrajectory, idx: BesovIndex) -> Result<PropagationReport> {
    if !(idx.s > -1.0 && idx.s < 1.0) {
        return Err(Error::Hypothesis(format!("regularity s must lie in (-1, 1), got {}", idx.s)));
    }
    let k = traj.p_index(idx.p)?;
    let hist = &traj.block_history[k];
    let lhs = spacetime_besov(hist, idx, f64::INFINITY, true)?;
    let theta0_besov = crate::lp::besov_from_blocks(&hist.norms()[0], idx.s, idx.r);
    let forcing = spacetime_besov(&traj.forcing_blocks[k], idx, 1.0, false)?;
    let v = traj.velocity.lipschitz_integral();
    Ok(PropagationReport {
        index: idx,
        lhs,
        theta0_besov,
        forcing,
        lipschitz_integral: v,
        ratio: ratio(lhs, v.exp() * (theta0_besov + forcing)),
    })
}

/// Richardson estimate `log2(|a - b| / |b - c|)` from three runs at step
/// sizes `h`, `h/2`, `h/4`.
pub fn observed_order(a: &Field, b: &Field, c: &Field) -> f64 {
    (a.max_diff(b) / b.max_diff(c)).log2()
}
