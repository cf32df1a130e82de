use std::f64::consts::PI;
use std::path::Path;

use blab_core::boussinesq::{desk_initial, p_label, run_bouss_with, BoussConfig, SimState};
use blab_core::ensemble::{derive_seed, random_scalar, random_velocity, SpectrumSpec};
use blab_core::io::{read_snapshot, read_state, write_snapshot, write_state, ResultRow, ResultWriter, RunConfig, Snapshot};
use blab_core::lp::{besov_from_blocks, build_partition};
use blab_core::tdsolver::{
    report_besov_propagation, report_log_estimate, report_max_principle, report_smoothing_effect, run_td, Prescribed,
    TDConfig,
};
use blab_core::verify::{resolution_drift, run_ensemble, summarize, EnsembleSettings, Estimate};
use blab_core::{BesovIndex, Error, Field, Grid, VectorField};

use crate::{Check, CliError};

type Rows = ResultWriter<std::io::BufWriter<std::fs::File>>;

fn exp_name(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn initial_state(cfg: &RunConfig, grid: &Grid) -> Result<SimState, CliError> {
    let state = match cfg.text("sim.initial") {
        "desk" => desk_initial(grid),
        "random" => {
            let spec = SpectrumSpec::new(cfg.float("sim.slope"));
            let seed = cfg.seed();
            SimState::new(
                random_scalar(grid, spec, derive_seed(seed, &[1])).scaled(0.5),
                random_scalar(grid, spec, derive_seed(seed, &[2])),
                0.0,
            )?
        }
        _ => {
            let path = cfg.text("sim.snapshot_in");
            if path.is_empty() {
                return Err(CliError::Usage("sim.initial = snapshot needs sim.snapshot_in".into()));
            }
            let s = read_state(path)?;
            if s.grid().n() != grid.n() || s.grid().period() != grid.period() {
                return Err(CliError::Usage(format!(
                    "snapshot grid (n = {}, period = {}) differs from grid.n/grid.period",
                    s.grid().n(),
                    s.grid().period()
                )));
            }
            // snapshots carry no dealias fraction; take the configured one
            SimState::new(
                Field::new(*grid, s.omega.into_values())?,
                Field::new(*grid, s.theta.into_values())?,
                s.t,
            )?
        }
    };
    Ok(state)
}

pub fn simulate(cfg: &RunConfig, dir: &Path) -> Result<Vec<Check>, CliError> {
    let grid = cfg.grid()?;
    let state0 = initial_state(cfg, &grid)?;
    let alpha = cfg.float("sim.alpha");
    let gamma_budget = cfg.boolean("sim.gamma_budget");
    if gamma_budget && alpha != 1.0 {
        return Err(CliError::Usage(format!(
            "sim.gamma_budget needs sim.alpha = 1 (got {alpha}); set sim.gamma_budget = false"
        )));
    }
    let bc = BoussConfig {
        cfl_safety: cfg.float("sim.cfl_safety"),
        advect: cfg.boolean("sim.advect"),
        p_list: cfg.floats("sim.p_list").to_vec(),
        monitor_stride: cfg.usize("sim.monitor_stride"),
        snapshot_stride: cfg.usize("sim.snapshot_stride"),
        gamma_p: gamma_budget.then(|| cfg.float("sim.gamma_p")),
        ..BoussConfig::new(alpha, cfg.float("sim.dt"), cfg.float("sim.t_end"))
    };
    let snaps = dir.join("snapshots");
    std::fs::create_dir_all(&snaps).map_err(Error::from)?;
    let mut count = 0usize;
    let traj = run_bouss_with(&state0, &bc, |s| {
        write_state(snaps.join(format!("state_{count:05}.blab")), s)?;
        count += 1;
        Ok(())
    })?;
    let id = cfg.run_id();

    let mut w = Rows::create(dir.join("norms.csv"))?;
    for (i, &t) in traj.times().iter().enumerate() {
        for (k, &p) in traj.theta_norms.p_list.iter().enumerate() {
            w.write(&ResultRow::new(id, t, format!("theta_{}", p_label(p)), traj.theta_norms.values[i][k]))?;
        }
        w.write(&ResultRow::new(id, t, "omega_Linf", traj.omega_linf[i]))?;
        w.write(&ResultRow::new(id, t, "kinetic_energy", traj.kinetic_energy[i]))?;
        w.write(&ResultRow::new(id, t, "mean_omega", traj.means[i].0))?;
        w.write(&ResultRow::new(id, t, "mean_theta", traj.means[i].1))?;
    }
    w.finish()?;

    if let Some(rec) = &traj.apriori {
        let mut w = Rows::create(dir.join("apriori.csv"))?;
        for (name, series) in &rec.series {
            for (t, v) in rec.times.iter().zip(series) {
                w.write(&ResultRow::new(id, *t, name.as_str(), *v))?;
            }
        }
        w.finish()?;
    }

    let mut checks = Vec::new();
    for &p in &bc.p_list {
        let m = traj.monotonicity(p)?;
        checks.push(Check::new(
            format!("max_principle_{}", p_label(p)),
            m.bounded() && m.non_increasing(),
            format!("worst excess {:e}, worst step increase {:e}", m.worst_excess, m.worst_increase),
        ));
    }
    if let Some(budget) = &traj.gamma_budget {
        let mut w = Rows::create(dir.join("gamma_budget.csv"))?;
        for r in &budget.rows {
            w.write(&ResultRow::new(id, r.t, "residual_L2", r.residual))?;
            w.write(&ResultRow::new(id, r.t, "norm_rate", r.norm_rate))?;
            w.write(&ResultRow::new(id, r.t, "commutator", r.commutator))?;
            w.write(&ResultRow::new(id, r.t, "slack", r.slack))?;
        }
        w.finish()?;
        let worst = budget.worst_violation();
        checks.push(Check::new(
            format!("gamma_budget_{}", p_label(budget.p())),
            worst.is_none(),
            match worst {
                None => format!("{} rows, max residual {:e}", budget.rows.len(), budget.max_residual()),
                Some(r) => format!("violated at t = {}: rate {} > {} + {}", r.t, r.norm_rate, r.commutator, r.slack),
            },
        ));
    }
    let end = traj.final_state();
    checks.push(Check::new(
        "finite",
        end.omega.max_abs().is_finite() && end.theta.max_abs().is_finite(),
        format!("t = {}, max |omega| = {}", end.t, end.omega.max_abs()),
    ));
    Ok(checks)
}

fn td_velocity(cfg: &RunConfig, grid: &Grid) -> Result<Prescribed<VectorField>, CliError> {
    let a = cfg.float("td.amplitude");
    let k = grid.wavenumber_unit();
    let v = match cfg.text("td.velocity") {
        "zero" => return Ok(Prescribed::Zero),
        "shear" => VectorField::divergence_free(
            Field::from_fn(*grid, |_, y| a * (k * y).sin())?,
            Field::zeros(*grid),
        )?,
        "cellular" => VectorField::divergence_free(
            Field::from_fn(*grid, |x, y| -a * (k * x).sin() * (k * y).cos())?,
            Field::from_fn(*grid, |x, y| a * (k * x).cos() * (k * y).sin())?,
        )?,
        _ => random_velocity(grid, SpectrumSpec::new(cfg.float("td.slope")), derive_seed(cfg.seed(), &[3]))?.scaled(a),
    };
    Ok(Prescribed::Steady(v))
}

fn td_forcing(cfg: &RunConfig, grid: &Grid) -> Result<Prescribed<Field>, CliError> {
    let a = cfg.float("td.forcing_amplitude");
    let k = grid.wavenumber_unit();
    let shape = Field::from_fn(*grid, |x, y| a * (k * x).sin() * (k * y).cos())?;
    Ok(match cfg.text("td.forcing") {
        "zero" => Prescribed::Zero,
        "steady" => Prescribed::Steady(shape),
        _ => Prescribed::analytic(move |t| Ok(shape.scaled((2.0 * PI * t).cos()))),
    })
}

pub fn td_run(cfg: &RunConfig, dir: &Path) -> Result<Vec<Check>, CliError> {
    let grid = cfg.grid()?;
    let k = grid.wavenumber_unit();
    let theta0 = match cfg.text("td.initial") {
        "sine" => Field::from_fn(grid, |x, _| (k * x).sin())?,
        "desk" => desk_initial(&grid).theta,
        _ => random_scalar(&grid, SpectrumSpec::new(cfg.float("td.slope")), derive_seed(cfg.seed(), &[4])),
    };
    let tc = TDConfig {
        cfl_safety: cfg.float("td.cfl_safety"),
        stride: cfg.usize("td.stride"),
        state_stride: 0,
        p_list: cfg.floats("td.p_list").to_vec(),
        dissipation: cfg.boolean("td.dissipation"),
        ..TDConfig::new(cfg.float("td.alpha"), cfg.float("td.dt"), cfg.float("td.t_end"))
    };
    let traj = run_td(&theta0, &td_velocity(cfg, &grid)?, &td_forcing(cfg, &grid)?, &tc)?;
    let id = cfg.run_id();
    let (t_end, last) = traj.states.last().expect("trajectory keeps its final state");
    write_snapshot(
        dir.join("final.blab"),
        &Snapshot {
            grid,
            t: *t_end,
            fields: vec![("theta".into(), last.clone())],
        },
    )?;

    let mut w = Rows::create(dir.join("norms.csv"))?;
    let nh = &traj.norm_history;
    for (i, &t) in nh.times.iter().enumerate() {
        for (j, &p) in nh.p_list.iter().enumerate() {
            w.write(&ResultRow::new(id, t, format!("theta_{}", p_label(p)), nh.values[i][j]))?;
        }
    }
    w.finish()?;

    let mut w = Rows::create(dir.join("blocks.csv"))?;
    for hist in &traj.block_history {
        let name = format!("block_{}", p_label(hist.p()));
        for (t, row) in hist.times().iter().zip(hist.norms()) {
            for (i, v) in row.iter().enumerate() {
                w.write(&ResultRow::new(id, *t, name.as_str(), *v).with_index(i as i64 - 1))?;
            }
        }
    }
    w.finish()?;

    let mut w = Rows::create(dir.join("reports.csv"))?;
    let mut checks = Vec::new();
    let t = *t_end;
    for &p in &tc.p_list {
        let label = p_label(p);
        let m = report_max_principle(&traj, p)?;
        w.write(&ResultRow::new(id, t, format!("max_principle_{label}.worst_margin"), m.worst_margin))?;
        w.write(&ResultRow::new(id, t, format!("max_principle_{label}.tolerance"), m.tolerance))?;
        checks.push(Check::new(
            format!("max_principle_{label}"),
            m.holds(),
            format!("worst margin {:e} (tolerance {:e})", m.worst_margin, m.tolerance),
        ));
        if tc.stride == 1 && p.is_finite() {
            let s = report_smoothing_effect(&traj, p)?;
            w.write(&ResultRow::new(id, t, format!("smoothing_{label}.lhs"), s.lhs))?;
            w.write(&ResultRow::new(id, t, format!("smoothing_{label}.bracket"), s.bracket))?;
            w.write(&ResultRow::new(id, t, format!("smoothing_{label}.constant"), 0.0).with_value(s.constant))?;
        }
        let idx = BesovIndex::new(cfg.float("td.besov_s"), p, cfg.float("td.besov_r"))?;
        let b = report_besov_propagation(&traj, idx)?;
        w.write(&ResultRow::new(id, t, format!("propagation_{label}.lhs"), b.lhs))?;
        w.write(&ResultRow::new(id, t, format!("propagation_{label}.ratio"), 0.0).with_value(b.ratio))?;
    }
    if tc.p_list.contains(&2.0) {
        let r = report_log_estimate(&traj, 2.0)?;
        w.write(&ResultRow::new(id, t, "log_estimate.lhs", r.lhs))?;
        w.write(&ResultRow::new(id, t, "log_estimate.lipschitz_integral", r.lipschitz_integral))?;
        w.write(&ResultRow::new(id, t, "log_estimate.ratio", 0.0).with_value(r.ratio))?;
        w.write(&ResultRow::new(id, t, "log_estimate.contrast_ratio", 0.0).with_value(r.contrast_ratio))?;
        w.write(&ResultRow::new(id, t, "log_estimate.split_n", r.split_n as f64))?;
    }
    w.finish()?;
    Ok(checks)
}

/// Ensemble settings from `verify.*`; `auto` exponents keep the estimate's
/// defaults.
pub fn ensemble_settings(cfg: &RunConfig) -> Result<EnsembleSettings, CliError> {
    let estimate: Estimate = cfg.text("verify.estimate").parse()?;
    let mut s = EnsembleSettings::new(estimate);
    s.members = cfg.usize("verify.members");
    s.seed = cfg.seed();
    s.slope = cfg.float("verify.slope");
    if let Some(p) = cfg.auto_float("verify.p") {
        s.p = p;
    }
    if let Some(r) = cfg.auto_float("verify.r") {
        s.r = r;
    }
    s.rho = cfg.float("verify.rho");
    s.epsilon = cfg.float("verify.eps");
    s.m = cfg.float("verify.m");
    s.p_even = u32::try_from(cfg.int("verify.p_even"))
        .map_err(|_| CliError::Usage("verify.p_even is too large".into()))?;
    s.shells = cfg
        .ints("verify.shells")
        .iter()
        .map(|&q| i32::try_from(q).map_err(|_| CliError::Usage(format!("shell {q} out of range"))))
        .collect::<Result<_, _>>()?;
    Ok(s)
}

pub fn verify(cfg: &RunConfig, dir: &Path) -> Result<Vec<Check>, CliError> {
    let settings = ensemble_settings(cfg)?;
    let est = settings.estimate;
    let mut summaries = Vec::new();
    let mut w = Rows::create(dir.join("reports.csv"))?;
    for &n in cfg.ints("verify.n_list") {
        let n = usize::try_from(n).map_err(|_| CliError::Usage(format!("bad resolution {n}")))?;
        let reports = run_ensemble(&settings, n)?;
        let id = format!("{}-n{n}", cfg.run_id());
        for (i, r) in reports.iter().enumerate() {
            let i = i as i64;
            w.write(&ResultRow::new(&id, 0.0, "ratio", 0.0).with_value(r.ratio).with_index(i))?;
            w.write(&ResultRow::new(&id, 0.0, "lhs", r.lhs).with_index(i))?;
            for (name, v) in &r.rhs_factors {
                w.write(&ResultRow::new(&id, 0.0, format!("rhs.{name}"), *v).with_index(i))?;
            }
            if let Some(q) = r.meta.shell {
                w.write(&ResultRow::new(&id, 0.0, "shell", q as f64).with_index(i))?;
            }
        }
        summaries.push(summarize(est, n, &reports));
    }
    w.finish()?;

    let mut w = Rows::create(dir.join("summary.csv"))?;
    for s in &summaries {
        let id = format!("{}-n{}", cfg.run_id(), s.n);
        w.write(&ResultRow::new(&id, 0.0, "max_ratio", s.max_ratio))?;
        w.write(&ResultRow::new(&id, 0.0, "min_ratio", s.min_ratio))?;
        w.write(&ResultRow::new(&id, 0.0, "reports", s.reports as f64))?;
        w.write(&ResultRow::new(&id, 0.0, "degenerate", s.degenerate as f64))?;
    }
    let mut checks = vec![
        Check::new(
            format!("{est}.finite"),
            summaries.iter().all(|s| s.all_finite()),
            summaries
                .iter()
                .map(|s| format!("n = {}: [{:.4e}, {:.4e}]", s.n, s.min_ratio, s.max_ratio))
                .collect::<Vec<_>>()
                .join("; "),
        ),
        Check::new(
            format!("{est}.no_degenerate"),
            summaries.iter().all(|s| s.degenerate == 0),
            format!("{} degenerate reports", summaries.iter().map(|s| s.degenerate).sum::<usize>()),
        ),
    ];
    let max_drift = cfg.float("verify.max_drift");
    for pair in summaries.windows(2) {
        let drift = resolution_drift(&pair[0], &pair[1]);
        w.write(&ResultRow::new(cfg.run_id(), 0.0, format!("drift_n{}_n{}", pair[0].n, pair[1].n), drift))?;
        checks.push(Check::new(
            format!("{est}.drift_n{}_n{}", pair[0].n, pair[1].n),
            drift < max_drift,
            format!("factor {drift:.4} (limit {max_drift})"),
        ));
    }
    w.finish()?;
    if est.is_lower_bound() {
        let min = summaries.iter().map(|s| s.min_ratio).fold(f64::INFINITY, f64::min);
        checks.push(Check::new(format!("{est}.positive"), min > 0.0, format!("min ratio {min:.4e}")));
    }
    if est == Estimate::Lemma32 {
        let max = summaries.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
        checks.push(Check::new(format!("{est}.constant_one"), max <= 1.05, format!("max ratio {max:.4}")));
    }
    Ok(checks)
}

pub fn analyze(cfg: &RunConfig, dir: &Path) -> Result<Vec<Check>, CliError> {
    let input = cfg.text("analyze.input");
    if input.is_empty() {
        return Err(CliError::Usage("analyze needs analyze.input".into()));
    }
    let snap = read_snapshot(input)?;
    let grid = Grid::with_dealias(snap.grid.n(), snap.grid.period(), cfg.float("grid.dealias"))?;
    let part = build_partition(&grid)?;
    let (s, r) = (cfg.float("analyze.besov_s"), cfg.float("analyze.besov_r"));
    let mut shells = csv::Writer::from_path(dir.join("shells.csv")).map_err(Error::from)?;
    shells
        .write_record(["field", "p", "q", "norm_Lp", "weighted"])
        .map_err(Error::from)?;
    let mut w = Rows::create(dir.join("besov.csv"))?;
    for (name, f) in &snap.fields {
        let f = Field::new(grid, f.values().to_vec())?;
        for &p in cfg.floats("analyze.p_list") {
            let norms = part.block_norms(&f, p)?;
            for (q, b) in part.shells().zip(&norms) {
                let weighted = 2f64.powf(q as f64 * s) * b;
                shells
                    .write_record([
                        name.clone(),
                        exp_name(p),
                        q.to_string(),
                        format!("{b:?}"),
                        format!("{weighted:?}"),
                    ])
                    .map_err(Error::from)?;
            }
            let metric = format!("{name}.besov_s{s}_p{}_r{}", exp_name(p), exp_name(r));
            w.write(&ResultRow::new(cfg.run_id(), snap.t, metric, besov_from_blocks(&norms, s, r)))?;
        }
    }
    shells.flush().map_err(Error::from)?;
    w.finish()?;
    Ok(Vec::new())
}
