//! Euler-Boussinesq system with fractional dissipation in vorticity form,
//!
//! ```text
//! d_t omega + v . grad omega = d_1 theta
//! d_t theta + v . grad theta + |D|^alpha theta = 0,   v = K * omega,
//! ```
//!
//! with the `Gamma = omega + R theta` diagnostics and the a priori monitor.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{Field, SpectralField, VectorField};
use crate::grid::Grid;
use crate::integrator::{lawson_rk4, step_schedule, Damping};
use crate::lp::{besov_norm, build_partition, BesovIndex, DyadicPartition};
use crate::paradiff::{advection_spectral, commutator_riesz};
use crate::spectral::{
    biot_savart, biot_savart_spectral, derivative_spectral, lebesgue_norm, riesz_spectral, Axis,
};
use crate::tdsolver::NormHistory;

/// Vorticity and temperature at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub omega: Field,
    pub theta: Field,
    pub t: f64,
}

impl SimState {
    pub fn new(omega: Field, theta: Field, t: f64) -> Result<Self> {
        if omega.grid() != theta.grid() {
            return Err(Error::GridMismatch);
        }
        omega.ensure_finite()?;
        theta.ensure_finite()?;
        Ok(Self { omega, theta, t })
    }

    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    /// Certified velocity `K * omega`.
    pub fn velocity(&self) -> Result<VectorField> {
        biot_savart(&self.omega)
    }

    /// Image under `x_1 -> -x_1`: `omega -> -omega o P`, `theta -> theta o P`.
    pub fn reflect_x1(&self) -> SimState {
        SimState {
            omega: self.omega.reflect_x1().scaled(-1.0),
            theta: self.theta.reflect_x1(),
            t: self.t,
        }
    }

    /// Largest pointwise difference over both fields.
    pub fn max_diff(&self, other: &SimState) -> f64 {
        self.omega.max_diff(&other.omega).max(self.theta.max_diff(&other.theta))
    }

    fn spectral(&self) -> [SpectralField; 2] {
        [self.omega.to_spectral(), self.theta.to_spectral()]
    }
}

/// `Gamma = omega + R theta`.
pub fn gamma(state: &SimState) -> Field {
    let mut g = riesz_spectral(&state.theta.to_spectral());
    g.add_assign_scaled(1.0, &state.omega.to_spectral());
    g.to_field()
}

fn gamma_spectral(omega: &SpectralField, theta: &SpectralField) -> SpectralField {
    let mut g = riesz_spectral(theta);
    g.add_assign_scaled(1.0, omega);
    g
}

/// Solver, monitor and output parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BoussConfig {
    pub alpha: f64,
    pub dt: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    /// `false` freezes the transport terms (`v = 0`) and keeps buoyancy and
    /// dissipation; a diagnostic mode.
    pub advect: bool,
    /// Exponents of the per-step `||theta||_p` history and the monitor.
    pub p_list: Vec<f64>,
    /// A priori monitor sampling; 0 disables it.
    pub monitor_stride: usize,
    /// Snapshots kept every `snapshot_stride` steps; 0 keeps only the
    /// initial and final states.
    pub snapshot_stride: usize,
    /// Exponent of the Gamma norm-rate check; `None` disables the budget.
    pub gamma_p: Option<f64>,
}

impl BoussConfig {
    pub fn new(alpha: f64, dt: f64, t_end: f64) -> Self {
        Self {
            alpha,
            dt,
            t_end,
            cfl_safety: 0.5,
            advect: true,
            p_list: vec![2.0, 4.0, f64::INFINITY],
            monitor_stride: 0,
            snapshot_stride: 0,
            gamma_p: None,
        }
    }

    /// Reference run: `dt = 2e-3`, `t_end = 5`, `alpha = 1`.
    pub fn desk() -> Self {
        Self {
            monitor_stride: 50,
            gamma_p: Some(4.0),
            ..Self::new(1.0, 2e-3, 5.0)
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
        if let Some(p) = self.p_list.iter().chain(&self.gamma_p).find(|p| !(**p >= 1.0)) {
            return bad(format!("L^p exponents must be >= 1, got {p}"));
        }
        if self.gamma_p.is_some() && self.alpha != 1.0 {
            return Err(Error::Hypothesis(format!(
                "the Gamma budget needs alpha = 1, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Reference grid: `n = 256`, period `2 pi`.
pub fn desk_grid() -> Grid {
    Grid::standard(256).expect("valid grid")
}

/// `theta0 = sin x1 sin x2 + 0.1 cos 2 x1`, `omega0 = 0`.
pub fn desk_initial(grid: &Grid) -> SimState {
    let theta = Field::from_fn(*grid, |x, y| x.sin() * y.sin() + 0.1 * (2.0 * x).cos())
        .expect("finite initial data");
    SimState {
        omega: Field::zeros(*grid),
        theta,
        t: 0.0,
    }
}

/// Dealiased velocity of a spectral vorticity.
fn velocity_of(omega: &SpectralField) -> (Field, Field) {
    let (u1, u2) = biot_savart_spectral(&omega.dealiased());
    (u1.to_field(), u2.to_field())
}

fn max_speed(v1: &Field, v2: &Field) -> f64 {
    v1.values()
        .iter()
        .zip(v2.values())
        .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
}

fn negated_advection(v1: &Field, v2: &Field, s: &SpectralField) -> SpectralField {
    let mut a = advection_spectral(v1, v2, s);
    for c in a.coeffs_mut() {
        *c = -*c;
    }
    // v is divergence free, so the transport term has zero mean
    a.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
    a
}

struct Stepper {
    grid: Grid,
    damping: Damping,
    safety: f64,
    advect: bool,
}

impl Stepper {
    fn new(grid: Grid, cfg: &BoussConfig) -> Self {
        Self {
            grid,
            damping: Damping::fractional(&grid, cfg.alpha, &[false, true]),
            safety: cfg.cfl_safety,
            advect: cfg.advect,
        }
    }

    fn rhs(&self, u: &[SpectralField], t: f64, h: f64) -> Result<Vec<SpectralField>> {
        let (omega, theta) = (&u[0], &u[1]);
        let mut d_omega = derivative_spectral(theta, Axis::X1);
        let mut d_theta = SpectralField::zeros(self.grid);
        if self.advect {
            let (v1, v2) = velocity_of(omega);
            let vmax = max_speed(&v1, &v2);
            let limit = self.safety * self.grid.spacing() / vmax;
            if vmax > 0.0 && h > limit * (1.0 + 1e-12) {
                return Err(Error::Cfl {
                    t,
                    max_velocity: vmax,
                    dt: h,
                    limit,
                });
            }
            if !vmax.is_finite() {
                return Err(Error::Blowup { t });
            }
            d_omega.add_assign_scaled(1.0, &negated_advection(&v1, &v2, omega));
            d_theta = negated_advection(&v1, &v2, theta);
        }
        Ok(vec![d_omega, d_theta])
    }

    fn step(&mut self, u: &[SpectralField], t: f64, h: f64) -> Result<Vec<SpectralField>> {
        let mut damping = self.damping.clone();
        let this = &*self;
        let out = lawson_rk4(u, t, h, &mut damping, |s, tt| this.rhs(s, tt, h))?;
        self.damping = damping;
        Ok(out)
    }
}

/// One IF-RK4 step with default safety factor and transport on.
pub fn bouss_step(state: &SimState, dt: f64, alpha: f64) -> Result<SimState> {
    let cfg = BoussConfig::new(alpha, dt, dt);
    bouss_step_with(state, dt, &cfg)
}

pub fn bouss_step_with(state: &SimState, dt: f64, cfg: &BoussConfig) -> Result<SimState> {
    let mut stepper = Stepper::new(*state.grid(), cfg);
    let next = stepper.step(&state.spectral(), state.t, dt)?;
    finish(&next, state.t + dt)
}

fn finish(u: &[SpectralField], t: f64) -> Result<SimState> {
    let omega = u[0].to_field();
    let theta = u[1].to_field();
    if omega.ensure_finite().is_err() || theta.ensure_finite().is_err() {
        return Err(Error::Blowup { t });
    }
    Ok(SimState { omega, theta, t })
}

/// One evaluation of the Gamma budget at the middle of three consecutive
/// states.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaBudgetRow {
    pub t: f64,
    /// `||d_t Gamma + v . grad Gamma + [R, v . grad] theta||_{L^2}` with a
    /// centered difference in time.
    pub residual: f64,
    /// Centered difference of `||Gamma||_{L^p}`.
    pub norm_rate: f64,
    /// `||[R, v . grad] theta||_{L^p}`.
    pub commutator: f64,
    pub slack: f64,
}

impl GammaBudgetRow {
    pub fn holds(&self) -> bool {
        self.norm_rate.abs() <= self.commutator + self.slack
    }
}

/// Streaming evaluation of `d_t Gamma + v . grad Gamma = -[R, v . grad] theta`
/// along a trajectory (`alpha = 1`).
#[derive(Clone, Debug)]
pub struct GammaBudget {
    p: f64,
    transport: bool,
    window: Vec<(f64, SpectralField, SpectralField, f64)>,
    pub rows: Vec<GammaBudgetRow>,
}

impl GammaBudget {
    pub fn new(p: f64) -> Self {
        Self::with_transport(p, true)
    }

    /// `transport = false` matches runs with frozen (`v = 0`) transport.
    pub fn with_transport(p: f64, transport: bool) -> Self {
        Self {
            p,
            transport,
            window: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Feeds the next state; states must be consecutive solver steps.
    pub fn push(&mut self, t: f64, omega: &SpectralField, theta: &SpectralField) -> Result<()> {
        let g = gamma_spectral(omega, theta).to_field();
        let norm = lebesgue_norm(&g, self.p)?;
        self.window.push((t, omega.clone(), theta.clone(), norm));
        if self.window.len() > 3 {
            self.window.remove(0);
        }
        if self.window.len() == 3 {
            let row = self.evaluate()?;
            self.rows.push(row);
        }
        Ok(())
    }

    fn evaluate(&self) -> Result<GammaBudgetRow> {
        let [(t0, o0, th0, n0), (t1, o1, th1, _), (t2, o2, th2, n2)] =
            [&self.window[0], &self.window[1], &self.window[2]];
        let (h0, h1) = (t1 - t0, t2 - t1);
        // three-point derivative at t1 on a possibly uneven stencil
        let (a, b, c) = (
            -h1 / (h0 * (h0 + h1)),
            (h1 - h0) / (h0 * h1),
            h0 / (h1 * (h0 + h1)),
        );
        let mut dg = gamma_spectral(o0, th0);
        for z in dg.coeffs_mut() {
            *z *= a;
        }
        dg.add_assign_scaled(b, &gamma_spectral(o1, th1));
        dg.add_assign_scaled(c, &gamma_spectral(o2, th2));

        let (v1, v2) = if self.transport {
            velocity_of(o1)
        } else {
            (Field::zeros(*o1.grid()), Field::zeros(*o1.grid()))
        };
        dg.add_assign_scaled(1.0, &advection_spectral(&v1, &v2, &gamma_spectral(o1, th1)));
        let v = VectorField::certified_unchecked(v1, v2);
        let theta = th1.to_field();
        let comm = commutator_riesz(&v, &theta)?;
        dg.add_assign_scaled(1.0, &comm.to_spectral());
        let residual = dg.energy().sqrt();
        let h = h0.max(h1);
        Ok(GammaBudgetRow {
            t: *t1,
            residual,
            norm_rate: (n2 - n0) / (h0 + h1),
            commutator: lebesgue_norm(&comm, self.p)?,
            slack: 10.0 * h * h * h + 1e-8,
        })
    }

    pub fn worst_violation(&self) -> Option<&GammaBudgetRow> {
        self.rows
            .iter()
            .filter(|r| !r.holds())
            .max_by(|a, b| {
                let ea = a.norm_rate.abs() - a.commutator - a.slack;
                let eb = b.norm_rate.abs() - b.commutator - b.slack;
                ea.total_cmp(&eb)
            })
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

/// `L2`, `L4`, `Linf`: exponent label used in series and metric names.
pub fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "Linf".into()
    } else {
        format!("L{p}")
    }
}

/// Named time series of the a priori quantities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AprioriRecord {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    /// Monitored exponents outside `(2, inf)`.
    pub flagged: Vec<f64>,
}

impl AprioriRecord {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    fn push(&mut self, name: String, value: f64) {
        match self.series.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push(value),
            None => self.series.push((name, vec![value])),
        }
    }

    /// First non-finite entry, if any.
    pub fn non_finite(&self) -> Option<(&str, f64)> {
        self.series.iter().find_map(|(n, v)| {
            v.iter()
                .position(|x| !x.is_finite())
                .map(|i| (n.as_str(), self.times[i]))
        })
    }

    pub fn fit(&self, name: &str, k: u32) -> Result<PhiFit> {
        let v = self
            .get(name)
            .ok_or_else(|| Error::InvalidParameter(format!("no series named '{name}'")))?;
        fit_phi(&self.times, v, k)
    }
}

/// Incremental a priori monitor.
#[derive(Clone, Debug)]
pub struct AprioriMonitor {
    part: DyadicPartition,
    p_list: Vec<f64>,
    record: AprioriRecord,
    /// Previous sample's `||Delta_q theta||_p` per `p`, and running integrals.
    last: Option<(f64, Vec<Vec<f64>>)>,
    integrals: Vec<Vec<f64>>,
}

impl AprioriMonitor {
    pub fn new(grid: &Grid, p_list: &[f64]) -> Result<Self> {
        let part = build_partition(grid)?;
        let flagged = p_list
            .iter()
            .copied()
            .filter(|p| !(*p > 2.0 && p.is_finite()))
            .collect();
        Ok(Self {
            integrals: vec![vec![0.0; part.shell_count()]; p_list.len()],
            part,
            p_list: p_list.to_vec(),
            record: AprioriRecord {
                flagged,
                ..AprioriRecord::default()
            },
            last: None,
        })
    }

    pub fn observe(&mut self, state: &SimState) -> Result<()> {
        let inf = f64::INFINITY;
        let b0 = BesovIndex::new(0.0, inf, 1.0)?;
        let b1 = BesovIndex::new(1.0, inf, 1.0)?;
        let v = state.velocity()?;
        let theta_s = state.theta.to_spectral();
        let r_theta = riesz_spectral(&theta_s).to_field();
        let g = &state.omega + &r_theta;
        let comm = commutator_riesz(&v, &state.theta)?;
        let t = state.t;
        let rec = &mut self.record;
        rec.times.push(t);

        let mut blocks_now = Vec::new();
        for &p in &self.p_list {
            let l = p_label(p);
            rec.push(format!("theta_{l}"), lebesgue_norm(&state.theta, p)?);
            rec.push(format!("omega_{l}"), lebesgue_norm(&state.omega, p)?);
            rec.push(format!("comm_{l}"), lebesgue_norm(&comm, p)?);
            rec.push(format!("gamma_{l}"), lebesgue_norm(&g, p)?);
            blocks_now.push(self.part.block_norms_spectral(&theta_s, p)?);
        }
        if !self.p_list.contains(&inf) {
            rec.push("theta_Linf".into(), lebesgue_norm(&state.theta, inf)?);
            rec.push("omega_Linf".into(), lebesgue_norm(&state.omega, inf)?);
            rec.push("gamma_Linf".into(), lebesgue_norm(&g, inf)?);
        }
        rec.push("rtheta_Linf".into(), lebesgue_norm(&r_theta, inf)?);
        rec.push("v_Linf".into(), v.max_norm());
        rec.push("omega_B0inf1".into(), besov_norm(&state.omega, b0, &self.part)?);
        rec.push("theta_B0inf1".into(), besov_norm(&state.theta, b0, &self.part)?);
        rec.push(
            "v_B1inf1".into(),
            besov_norm(v.u1(), b1, &self.part)? + besov_norm(v.u2(), b1, &self.part)?,
        );
        rec.push("comm_B0inf1".into(), besov_norm(&comm, b0, &self.part)?);

        // running trapezoid of 2^q ||Delta_q theta||_p, q >= 0
        if let Some((t_prev, prev)) = &self.last {
            let h = t - t_prev;
            for (k, acc) in self.integrals.iter_mut().enumerate() {
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += 0.5 * h * (prev[k][i] + blocks_now[k][i]);
                }
            }
        }
        for (k, &p) in self.p_list.iter().enumerate() {
            let sup = self.integrals[k]
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, a)| 2f64.powi(i as i32 - 1) * a)
                .fold(0.0, f64::max);
            rec.push(format!("smoothing_{}", p_label(p)), sup);
        }
        self.last = Some((t, blocks_now));
        Ok(())
    }

    pub fn record(&self) -> &AprioriRecord {
        &self.record
    }

    pub fn into_record(self) -> AprioriRecord {
        self.record
    }
}

/// Replays the monitor over stored states.
pub fn monitor_apriori(states: &[SimState], p_list: &[f64]) -> Result<AprioriRecord> {
    let first = states.first().ok_or(Error::EmptyHistory)?;
    let mut m = AprioriMonitor::new(first.grid(), p_list)?;
    for s in states {
        m.observe(s)?;
    }
    Ok(m.into_record())
}

/// Output of [`run_bouss`].
#[derive(Clone, Debug)]
pub struct SimTrajectory {
    pub grid: Grid,
    pub config: BoussConfig,
    pub states: Vec<SimState>,
    /// `||theta(t)||_p` at every step.
    pub theta_norms: NormHistory,
    /// `||omega(t)||_inf` at every step.
    pub omega_linf: Vec<f64>,
    /// `||v(t)||_{L^2}^2` at every step.
    pub kinetic_energy: Vec<f64>,
    /// Spatial means of `omega` and `theta` at every step.
    pub means: Vec<(f64, f64)>,
    pub gamma_budget: Option<GammaBudget>,
    pub apriori: Option<AprioriRecord>,
}

/// Pathwise maximum principle of `theta` for one exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub p: f64,
    /// `max_t (||theta(t)||_p / ||theta0||_p - 1)`.
    pub worst_excess: f64,
    /// Largest step-to-step increase relative to `||theta0||_p`.
    pub worst_increase: f64,
}

impl MonotonicityReport {
    /// Tolerance of the pathwise checks.
    pub const TOLERANCE: f64 = 1e-6;

    pub fn bounded(&self) -> bool {
        self.worst_excess <= Self::TOLERANCE
    }

    pub fn non_increasing(&self) -> bool {
        self.worst_increase <= Self::TOLERANCE
    }
}

impl SimTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.theta_norms.times
    }

    pub fn final_state(&self) -> &SimState {
        self.states.last().unwrap()
    }

    pub fn monotonicity(&self, p: f64) -> Result<MonotonicityReport> {
        let s = self.theta_norms.series(p)?;
        let scale = if s[0] > 0.0 { s[0] } else { 1.0 };
        Ok(MonotonicityReport {
            p,
            worst_excess: s.iter().map(|x| x / scale - 1.0).fold(f64::NEG_INFINITY, f64::max),
            worst_increase: s
                .windows(2)
                .map(|w| (w[1] - w[0]) / scale)
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

struct Sampler {
    theta_norms: NormHistory,
    omega_linf: Vec<f64>,
    kinetic_energy: Vec<f64>,
    means: Vec<(f64, f64)>,
}

impl Sampler {
    fn sample(&mut self, t: f64, u: &[SpectralField], theta: &Field, omega: &Field) -> Result<()> {
        let row = self
            .theta_norms
            .p_list
            .iter()
            .map(|&p| lebesgue_norm(theta, p))
            .collect::<Result<_>>()?;
        self.theta_norms.push(t, row);
        self.omega_linf.push(omega.max_abs());
        let (v1, v2) = biot_savart_spectral(&u[0]);
        self.kinetic_energy.push(v1.energy() + v2.energy());
        self.means.push((u[0].coeffs()[0].re, u[1].coeffs()[0].re));
        Ok(())
    }
}

/// Integrates from `state0` for `cfg.t_end` time units.
pub fn run_bouss(state0: &SimState, cfg: &BoussConfig) -> Result<SimTrajectory> {
    run_bouss_with(state0, cfg, |_| Ok(()))
}

/// As [`run_bouss`], calling `on_snapshot` for every kept snapshot.
pub fn run_bouss_with(
    state0: &SimState,
    cfg: &BoussConfig,
    mut on_snapshot: impl FnMut(&SimState) -> Result<()>,
) -> Result<SimTrajectory> {
    cfg.validate()?;
    let grid = *state0.grid();
    let mut stepper = Stepper::new(grid, cfg);
    let mut sampler = Sampler {
        theta_norms: NormHistory::new(&cfg.p_list),
        omega_linf: Vec::new(),
        kinetic_energy: Vec::new(),
        means: Vec::new(),
    };
    let mut budget = cfg.gamma_p.map(|p| GammaBudget::with_transport(p, cfg.advect));
    let mut monitor = if cfg.monitor_stride > 0 {
        Some(AprioriMonitor::new(&grid, &cfg.p_list)?)
    } else {
        None
    };

    let mut u = state0.spectral().to_vec();
    let mut t = state0.t;
    let mut states = vec![state0.clone()];
    on_snapshot(state0)?;
    sampler.sample(t, &u, &state0.theta, &state0.omega)?;
    if let Some(b) = budget.as_mut() {
        b.push(t, &u[0], &u[1])?;
    }
    if let Some(m) = monitor.as_mut() {
        m.observe(state0)?;
    }

    let steps = step_schedule(cfg.dt, cfg.t_end);
    for (i, &h) in steps.iter().enumerate() {
        let done = i + 1 == steps.len();
        u = stepper.step(&u, t, h)?;
        t = if done { state0.t + cfg.t_end } else { t + h };
        let state = finish(&u, t)?;
        sampler.sample(t, &u, &state.theta, &state.omega)?;
        if let Some(b) = budget.as_mut() {
            b.push(t, &u[0], &u[1])?;
        }
        if let Some(m) = monitor.as_mut() {
            if (i + 1) % cfg.monitor_stride == 0 || done {
                m.observe(&state)?;
            }
        }
        if done || (cfg.snapshot_stride > 0 && (i + 1) % cfg.snapshot_stride == 0) {
            on_snapshot(&state)?;
            states.push(state);
        }
    }
    Ok(SimTrajectory {
        grid,
        config: cfg.clone(),
        states,
        theta_norms: sampler.theta_norms,
        omega_linf: sampler.omega_linf,
        kinetic_energy: sampler.kinetic_energy,
        means: sampler.means,
        gamma_budget: budget,
        apriori: monitor.map(AprioriMonitor::into_record),
    })
}

/// Fitted constant of `Phi_k(t) = C0 exp(...exp(C0 t)...)` (k-fold).
#[derive(Clone, Debug, PartialEq)]
pub struct PhiFit {
    pub k: u32,
    /// Smallest `C0` with `Phi_k >= series` at every sample; among
    /// dominating curves it also minimizes the log-space squared misfit.
    pub c0: f64,
    /// Unconstrained log-space least-squares `C0`.
    pub c0_unconstrained: f64,
}

/// `ln Phi_k(t) = ln C0 + exp^{(k-1)}(C0 t)`.
fn ln_phi(k: u32, c0: f64, t: f64) -> f64 {
    let mut x = c0 * t;
    for _ in 1..k {
        x = x.exp();
    }
    c0.ln() + x
}

pub fn fit_phi(times: &[f64], values: &[f64], k: u32) -> Result<PhiFit> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidParameter(format!("Phi level must be 1, 2 or 3, got {k}")));
    }
    if times.len() != values.len() {
        return Err(Error::Length {
            expected: times.len(),
            actual: values.len(),
        });
    }
    if let Some(index) = times
        .iter()
        .zip(values)
        .position(|(t, v)| !(t.is_finite() && v.is_finite()))
    {
        return Err(Error::NonFinite { index });
    }
    let span = match (times.first(), times.last()) {
        (Some(a), Some(b)) => b - a,
        _ => return Err(Error::EmptyHistory),
    };
    if span < 1.0 {
        return Err(Error::InvalidParameter(format!("Phi fits need a span >= 1, got {span}")));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.is_empty() {
        // nothing positive to dominate
        return Ok(PhiFit {
            k,
            c0: 0.0,
            c0_unconstrained: 0.0,
        });
    }
    let dominates = |c: f64| pts.iter().all(|(t, lv)| ln_phi(k, c, *t) >= *lv);
    let mut hi = 1.0;
    while !dominates(hi) {
        hi *= 2.0;
    }
    let mut lo = hi;
    while lo > 1e-300 && dominates(lo) {
        lo *= 0.5;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if dominates(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let misfit = |c: f64| -> f64 {
        pts.iter()
            .map(|(t, lv)| (ln_phi(k, c, *t) - lv).powi(2))
            .sum()
    };
    Ok(PhiFit {
        k,
        c0: hi,
        c0_unconstrained: golden_min(misfit, hi.ln() - 12.0, hi.ln() + 2.0),
    })
}

/// Golden-section minimum of `f(exp(x))` on `[a, b]`, returned as `exp(x)`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    for _ in 0..200 {
        if f(c.exp()) < f(d.exp()) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    (0.5 * (a + b)).exp()
}

/// `S_n f` for `n in [0, q_max + 1]`.
pub fn truncate_initial_data(f: &Field, n_trunc: i32, part: &DyadicPartition) -> Result<Field> {
    if n_trunc < 0 || n_trunc > part.q_max() + 1 {
        return Err(Error::ShellOutOfRange {
            q: n_trunc,
            min: 0,
            max: part.q_max() + 1,
        });
    }
    crate::lp::low_pass(f, n_trunc, part)
}
