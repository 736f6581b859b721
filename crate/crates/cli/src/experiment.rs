//! Experiment drivers behind the subcommands. Each driver computes its
//! results in memory; the `write_*` functions turn them into CSV files.

use std::path::Path;

use fracpq::fit::loglog_slope;
use fracpq::inverse::{
    contraction_probe, ObservationSet, ProbeReport, Reconstruction, Reconstructor, StopReason,
};
use fracpq::synthdata::{add_noise, generate_observations};
use fracpq::{
    decay_diagnostic, make_phantoms, phantom_p, phantom_q, solve_ibvp, solve_steady_from, sobolev_norm,
    Field, ProblemSpec, SobolevOrder, SolverOptions, SpatialGrid, Trajectory,
};
use log::info;
use rayon::prelude::*;

use crate::config::{Coefficients, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::{fmt, fmt_opt, Table};

/// Iterates written as `fields_<k>.csv`.
pub const FIELD_ITERATES: [usize; 3] = [1, 2, 6];

fn forward_spec(cfg: &ExperimentConfig) -> Result<ProblemSpec> {
    let tpl = cfg.template()?;
    let grid = tpl.space_grid;
    let (p, q) = match cfg.forward.coefficients {
        Coefficients::Phantom => make_phantoms(&grid),
        Coefficients::Zero => (Field::zeros(grid), Field::zeros(grid)),
    };
    Ok(tpl.instantiate(&cfg.primary_run(), p, q))
}

fn steady_for(spec: &ProblemSpec) -> Result<Field> {
    let r_inf = spec.source.sample(spec.time_grid.horizon(), &spec.space_grid);
    Ok(solve_steady_from(spec, &r_inf, &spec.u0, &SolverOptions::default())?)
}

pub struct ForwardResult {
    pub trajectory: Trajectory,
    pub steady: Option<Field>,
}

pub fn forward(cfg: &ExperimentConfig) -> Result<ForwardResult> {
    let spec = forward_spec(cfg)?;
    let trajectory = solve_ibvp(&spec)?;
    let steady = if cfg.forward.steady_distance {
        Some(steady_for(&spec)?)
    } else {
        None
    };
    Ok(ForwardResult { trajectory, steady })
}

pub fn write_forward(res: &ForwardResult, dir: &Path) -> Result<()> {
    let tg = res.trajectory.time_grid();
    let mut traj = Table::new(&["t", "x", "u"]);
    for (m, t) in tg.times().enumerate() {
        let state = res.trajectory.state(m);
        for (x, u) in state.grid().nodes().zip(state.values()) {
            traj.push_floats(&[t, x, *u]);
        }
    }
    traj.write(dir, "trajectory.csv")?;

    let mut header = vec!["t", "l2", "h1"];
    let distances = match &res.steady {
        Some(u_inf) => {
            header.push("dist_h1_sq");
            Some(decay_diagnostic(&res.trajectory, u_inf)?.curve)
        }
        None => None,
    };
    let mut summary = Table::new(&header);
    for (m, t) in tg.times().enumerate() {
        let state = res.trajectory.state(m);
        let mut row = vec![
            t,
            sobolev_norm(state, SobolevOrder::L2),
            sobolev_norm(state, SobolevOrder::H1),
        ];
        if let Some(d) = &distances {
            row.push(d[m].1);
        }
        summary.push_floats(&row);
    }
    summary.write(dir, "summary.csv")?;
    Ok(())
}

pub fn steady(cfg: &ExperimentConfig) -> Result<Field> {
    steady_for(&forward_spec(cfg)?)
}

pub fn write_steady(u: &Field, dir: &Path) -> Result<()> {
    let mut t = Table::new(&["x", "u"]);
    for (x, v) in u.grid().nodes().zip(u.values()) {
        t.push_floats(&[x, *v]);
    }
    t.write(dir, "steady.csv")?;
    Ok(())
}

/// Synthetic observations at the phantom coefficients, with noise if configured.
pub fn observations(cfg: &ExperimentConfig) -> Result<ObservationSet> {
    let tpl = cfg.template()?;
    let mut obs = generate_observations(
        &phantom_p(),
        &phantom_q(),
        &tpl,
        cfg.design(),
        cfg.crime_mode(),
        &SolverOptions::default(),
    )?;
    let delta = cfg.noise.delta;
    if delta > 0.0 {
        let seed = cfg.noise.seed.wrapping_mul(2);
        obs.g1 = add_noise(&obs.g1, delta, cfg.noise.smoothing_length, seed)?;
        obs.g2 = add_noise(&obs.g2, delta, cfg.noise.smoothing_length, seed.wrapping_add(1))?;
    }
    Ok(obs)
}

pub struct InvertResult {
    pub grid: SpatialGrid,
    pub p_act: Field,
    pub q_act: Field,
    pub clamped_nodes: usize,
    pub reconstruction: Reconstruction,
}

pub fn invert(cfg: &ExperimentConfig) -> Result<InvertResult> {
    let tpl = cfg.template()?;
    let obs = observations(cfg)?;
    let grid = tpl.space_grid;
    let (p_act, q_act) = make_phantoms(&grid);
    let engine = Reconstructor::new(&obs, &tpl, cfg.reconstruction_options())?;
    let clamped_nodes = engine.clamped_nodes().iter().filter(|&&c| c).count();
    let reconstruction = engine.run(cfg.initial_guess()?, Some((&p_act, &q_act)))?;
    info!(
        "{}: alpha = {}, delta = {}, {} iterates, stop = {:?}",
        cfg.observation.mode.name(),
        cfg.problem.alpha,
        cfg.noise.delta,
        reconstruction.records.len(),
        reconstruction.stop
    );
    Ok(InvertResult {
        grid,
        p_act,
        q_act,
        clamped_nodes,
        reconstruction,
    })
}

fn stop_label(stop: &StopReason) -> String {
    match stop {
        StopReason::Converged => "converged".into(),
        StopReason::Stationary => "stationary".into(),
        StopReason::MaxIterations => "max_iterations".into(),
        StopReason::StepsizeFailure => "stepsize_failure".into(),
        StopReason::SolverFailure(e) => format!("solver_failure: {e}"),
    }
}

pub fn iterates_table(rec: &Reconstruction) -> Table {
    let mut t = Table::new(&["k", "mu", "misfit", "increment_norm", "rel_err_p", "rel_err_q"]);
    for r in &rec.records {
        t.push(vec![
            r.k.to_string(),
            fmt(r.mu),
            fmt(r.misfit),
            fmt(r.increment_norm),
            fmt_opt(r.rel_err_p),
            fmt_opt(r.rel_err_q),
        ]);
    }
    t
}

pub fn write_invert(res: &InvertResult, dir: &Path) -> Result<()> {
    let rec = &res.reconstruction;
    iterates_table(rec).write(dir, "iterates.csv")?;
    for k in FIELD_ITERATES {
        if let Some(r) = rec.iterate(k) {
            let mut t = Table::new(&["x".to_string(), format!("p_{k}"), format!("q_{k}"), "p_act".into(), "q_act".into()]);
            for (j, x) in res.grid.nodes().enumerate() {
                t.push_floats(&[x, r.p.values()[j], r.q.values()[j], res.p_act.values()[j], res.q_act.values()[j]]);
            }
            t.write(dir, &format!("fields_{k}.csv"))?;
        }
    }
    let mut info = Table::new(&["key", "value"]);
    info.push(vec!["initial_misfit".into(), fmt(rec.initial_misfit)]);
    info.push(vec!["clamped_nodes".into(), res.clamped_nodes.to_string()]);
    info.push(vec!["iterations".into(), rec.records.len().to_string()]);
    info.push(vec!["stop".into(), stop_label(&rec.stop)]);
    info.write(dir, "run_info.csv")?;
    Ok(())
}

/// Maps an abnormal stop to the corresponding error after results were written.
pub fn check_stop(stop: &StopReason) -> Result<()> {
    match stop {
        StopReason::Converged | StopReason::Stationary | StopReason::MaxIterations => Ok(()),
        StopReason::StepsizeFailure => Err(CliError::Stopped(stop_label(stop))),
        StopReason::SolverFailure(e) => Err(CliError::Solver(e.clone())),
    }
}

#[derive(Debug, Clone)]
pub struct AlphaRow {
    pub alpha: f64,
    pub p_first: Option<f64>,
    pub p_sixth: Option<f64>,
    pub q_first: Option<f64>,
    pub q_sixth: Option<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Reconstruction for every configured `alpha`, in parallel.
pub fn sweep_alpha(cfg: &ExperimentConfig) -> Result<Vec<AlphaRow>> {
    cfg.sweep
        .alphas
        .par_iter()
        .map(|&alpha| {
            let mut c = cfg.clone();
            c.problem.alpha = alpha;
            c.inverse.k_max = c.inverse.k_max.max(6);
            let res = invert(&c)?;
            let rec = &res.reconstruction;
            // A run that converged before the sixth step keeps its final iterate.
            let sixth = rec.iterate(6).or_else(|| rec.last());
            Ok(AlphaRow {
                alpha,
                p_first: rec.iterate(1).and_then(|r| r.rel_err_p),
                p_sixth: sixth.and_then(|r| r.rel_err_p),
                q_first: rec.iterate(1).and_then(|r| r.rel_err_q),
                q_sixth: sixth.and_then(|r| r.rel_err_q),
                iterations: rec.records.len(),
                stop: rec.stop.clone(),
            })
        })
        .collect()
}

pub fn write_sweep_alpha(rows: &[AlphaRow], dir: &Path) -> Result<()> {
    let mut t = Table::new(&["alpha", "p_it1", "p_it6", "q_it1", "q_it6", "iterations", "stop"]);
    for r in rows {
        t.push(vec![
            fmt(r.alpha),
            fmt_opt(r.p_first),
            fmt_opt(r.p_sixth),
            fmt_opt(r.q_first),
            fmt_opt(r.q_sixth),
            r.iterations.to_string(),
            stop_label(&r.stop),
        ]);
    }
    t.write(dir, "sweep_alpha.csv")?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct NoiseRow {
    pub delta: f64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone)]
pub struct NoiseSweep {
    pub rows: Vec<NoiseRow>,
    pub slope_p: Option<f64>,
    pub slope_q: Option<f64>,
}

/// Errors at a fixed iterate for every noise level; no early stopping.
pub fn sweep_noise(cfg: &ExperimentConfig) -> Result<NoiseSweep> {
    let iterate = cfg.sweep.noise_iterate;
    let rows = cfg
        .sweep
        .deltas
        .par_iter()
        .map(|&delta| {
            let mut c = cfg.clone();
            c.noise.delta = delta;
            c.inverse.tol = 0.0;
            c.inverse.k_max = iterate;
            let res = invert(&c)?;
            let rec = &res.reconstruction;
            // A stationary run no longer moves; its last iterate stands for the rest.
            let at = rec.iterate(iterate).or_else(|| match rec.stop {
                StopReason::Stationary => rec.last(),
                _ => None,
            });
            Ok(NoiseRow {
                delta,
                p: at.and_then(|r| r.rel_err_p),
                q: at.and_then(|r| r.rel_err_q),
                iterations: rec.records.len(),
                stop: rec.stop.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let points = |sel: fn(&NoiseRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter().filter_map(|r| sel(r).map(|e| (r.delta, e))).collect()
    };
    let slope_p = loglog_slope(&points(|r| r.p));
    let slope_q = loglog_slope(&points(|r| r.q));
    Ok(NoiseSweep { rows, slope_p, slope_q })
}

pub fn write_sweep_noise(sweep: &NoiseSweep, dir: &Path) -> Result<()> {
    let mut t = Table::new(&["delta", "p", "q", "iterations", "stop"]);
    for r in &sweep.rows {
        t.push(vec![
            fmt(r.delta),
            fmt_opt(r.p),
            fmt_opt(r.q),
            r.iterations.to_string(),
            stop_label(&r.stop),
        ]);
    }
    t.write(dir, "sweep_noise.csv")?;
    let mut s = Table::new(&["quantity", "loglog_slope"]);
    s.push(vec!["p".into(), fmt_opt(sweep.slope_p)]);
    s.push(vec!["q".into(), fmt_opt(sweep.slope_q)]);
    s.write(dir, "noise_slope.csv")?;
    Ok(())
}

pub fn probe(cfg: &ExperimentConfig) -> Result<ProbeReport> {
    let tpl = cfg.template()?;
    let obs = observations(cfg)?;
    let (p_act, q_act) = make_phantoms(&tpl.space_grid);
    Ok(contraction_probe(
        &obs,
        &tpl,
        (&p_act, &q_act),
        cfg.probe.rho,
        cfg.probe.samples,
        cfg.noise.seed,
        cfg.reconstruction_options(),
    )?)
}

pub fn write_probe(report: &ProbeReport, dir: &Path) -> Result<()> {
    let mut t = Table::new(&["sample", "ratio"]);
    for (i, r) in report.ratios.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), fmt(*r)]);
    }
    t.write(dir, "probe.csv")?;
    let mut s = Table::new(&["worst", "median", "failures"]);
    s.push(vec![
        fmt_opt(report.worst()),
        fmt_opt(report.median()),
        report.failures.to_string(),
    ]);
    s.write(dir, "probe_summary.csv")?;
    Ok(())
}
