//! Fixed-point reconstruction of the coefficient pair `(p, q)`.
//!
//! Evaluating the equation on the observation set gives, at every node,
//!
//! ```text
//! res_i = D_t^alpha u_i(T_i) - r_i(T_i) + L g_i = q g_i - p f(g_i),   i = 1, 2,
//! ```
//!
//! a 2x2 system with determinant `det = g2 f(g1) - g1 f(g2)`. Solving it with
//! the residuals of the current iterate defines the map `T(p, q)`; the outer
//! loop relaxes towards `T(p, q)` with a monotone-misfit step size.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;

use crate::elliptic::{assemble, sobolev_norm, SobolevOrder, TridiagonalOperator};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::forward::{solve_ibvp_with, SolverOptions, Trajectory};
use crate::nonlinearity::Nonlinearity;
use crate::problem::{ProblemTemplate, RunSetup, Source};
use crate::synthdata::relative_error;

/// Largest fraction of nodes whose determinant may be clamped.
pub const MAX_CLAMPED_FRACTION: f64 = 0.2;

/// How the two snapshots were obtained.
#[derive(Debug, Clone)]
pub enum ObservationDesign {
    /// `g_i = u_i(T)` for two excitations, observed at the template horizon.
    TwoRun([RunSetup; 2]),
    /// `g_i = u(T_i)` for a single excitation, `0 < t1 < t2 <= horizon`.
    TwoTime { run: RunSetup, t1: f64, t2: f64 },
}

#[derive(Debug, Clone)]
pub struct ObservationSet {
    pub design: ObservationDesign,
    pub g1: Field,
    pub g2: Field,
}

impl ObservationSet {
    pub fn new(
        design: ObservationDesign,
        g1: Field,
        g2: Field,
        template: &ProblemTemplate,
    ) -> Result<Self> {
        let obs = Self { design, g1, g2 };
        obs.validate(template)?;
        Ok(obs)
    }

    pub fn validate(&self, template: &ProblemTemplate) -> Result<()> {
        for g in [&self.g1, &self.g2] {
            if *g.grid() != template.space_grid {
                return Err(Error::GridMismatch(
                    "observations are not on the inversion grid".into(),
                ));
            }
        }
        if let ObservationDesign::TwoTime { t1, t2, .. } = self.design {
            let horizon = template.time_grid.horizon();
            if !(t1 > 0.0 && t1 < t2 && t2 <= horizon * (1.0 + 1e-12)) {
                return Err(Error::Config(format!(
                    "observation times must satisfy 0 < t1 < t2 <= {horizon}, got {t1}, {t2}"
                )));
            }
        }
        Ok(())
    }

    pub fn g(&self) -> [&Field; 2] {
        [&self.g1, &self.g2]
    }
}

/// Nodewise `g2 f(g1) - g1 f(g2)`.
pub fn determinant_field(g1: &Field, g2: &Field, f: &Nonlinearity) -> Result<Field> {
    g1.zip_map(g2, |a, b| b * f.value(a) - a * f.value(b))
}

/// `1 / det` with `|det|` floored at `floor_eps`; returns the clamped-node mask.
///
/// Fails with [`Error::DegenerateObservations`] when more than
/// [`MAX_CLAMPED_FRACTION`] of the nodes needed clamping.
pub fn safe_reciprocal(det: &Field, floor_eps: f64) -> Result<(Field, Vec<bool>)> {
    if !(floor_eps > 0.0) {
        return Err(Error::Precondition(format!(
            "determinant floor must be positive, got {floor_eps}"
        )));
    }
    let mask: Vec<bool> = det.values().iter().map(|d| !(d.abs() >= floor_eps)).collect();
    let recip = det.map(|d| {
        if d.abs() >= floor_eps {
            1.0 / d
        } else if d < 0.0 {
            -1.0 / floor_eps
        } else {
            1.0 / floor_eps
        }
    });
    let clamped = mask.iter().filter(|&&m| m).count();
    if clamped as f64 > MAX_CLAMPED_FRACTION * det.len() as f64 {
        return Err(Error::DegenerateObservations {
            clamped,
            total: det.len(),
        });
    }
    Ok((recip, mask))
}

/// Residual of the equation at level `m` of `traj`, with the data `g` in the elliptic term.
fn residual_at_level(
    traj: &Trajectory,
    m: usize,
    source: &Source,
    g: &Field,
    op: &TridiagonalOperator,
) -> Result<Field> {
    let t = traj.time_grid().time(m);
    let caputo = traj.caputo_at(m)?;
    residual_from_parts(&caputo, source, t, g, op)
}

fn residual_from_parts(
    caputo: &Field,
    source: &Source,
    t: f64,
    g: &Field,
    op: &TridiagonalOperator,
) -> Result<Field> {
    caputo.check_same_grid(g)?;
    let lg = op.apply_with_data(g, t)?;
    let grid = *g.grid();
    let vals = caputo
        .values()
        .iter()
        .zip(lg.values())
        .zip(grid.nodes())
        .map(|((c, l), x)| c - source.eval(t, x) + l)
        .collect();
    Field::new(grid, vals)
}

/// `res_i` for a two-run observation, evaluated at the final time of `traj`.
pub fn residual_two_run(
    traj: &Trajectory,
    source: &Source,
    g: &Field,
    op: &TridiagonalOperator,
) -> Result<Field> {
    residual_at_level(traj, traj.time_grid().n_steps(), source, g, op)
}

/// `res_i` for a two-time observation at `t_i`, snapped to the nearest level.
pub fn residual_two_time(
    traj: &Trajectory,
    source: &Source,
    g: &Field,
    t_i: f64,
    op: &TridiagonalOperator,
) -> Result<Field> {
    let m = snap_level(traj.time_grid(), t_i);
    residual_at_level(traj, m, source, g, op)
}

fn snap_level(tg: &crate::grid::TimeGrid, t: f64) -> usize {
    let (m, exact) = tg.nearest_level(t);
    if !exact {
        warn!("observation time {t} is off the time grid; using t = {}", tg.time(m));
    }
    m
}

/// Nodewise solution of `q g_i - p f(g_i) = res_i`, `i = 1, 2`, using a
/// precomputed reciprocal determinant.
fn solve_pointwise(
    res: [&Field; 2],
    g: [&Field; 2],
    f: &Nonlinearity,
    det_recip: &Field,
) -> Result<(Field, Field)> {
    let grid = *g[0].grid();
    for field in [res[0], res[1], g[1], det_recip] {
        field.check_same_grid(g[0])?;
    }
    let n = grid.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for j in 0..n {
        let (g1, g2) = (g[0].values()[j], g[1].values()[j]);
        let (r1, r2) = (res[0].values()[j], res[1].values()[j]);
        let inv = det_recip.values()[j];
        p[j] = (g1 * r2 - g2 * r1) * inv;
        q[j] = (f.value(g1) * r2 - f.value(g2) * r1) * inv;
    }
    Ok((Field::new(grid, p)?, Field::new(grid, q)?))
}

/// One application of the fixed-point map from residuals:
/// `p = (g1 res2 - g2 res1) / det`, `q = (f(g1) res2 - f(g2) res1) / det`.
pub fn fixed_point_map(
    res1: &Field,
    res2: &Field,
    g1: &Field,
    g2: &Field,
    f: &Nonlinearity,
    floor_eps: f64,
) -> Result<(Field, Field)> {
    let det = determinant_field(g1, g2, f)?;
    let (recip, _) = safe_reciprocal(&det, floor_eps)?;
    solve_pointwise([res1, res2], [g1, g2], f, &recip)
}

/// Monotone backtracking: the largest `mu = theta^l`, `l = 0..=ell_max`, with
/// `misfit(current + mu * increment) <= baseline`.
pub fn step_size<F>(
    mut misfit_at: F,
    current: (&Field, &Field),
    increment: (&Field, &Field),
    baseline: f64,
    theta: f64,
    ell_max: u32,
) -> Result<f64>
where
    F: FnMut(&Field, &Field) -> Result<f64>,
{
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!("theta must lie in (0, 1), got {theta}")));
    }
    for ell in 0..=ell_max {
        let mu = theta.powi(ell as i32);
        let p = current.0.axpy(mu, increment.0)?;
        let q = current.1.axpy(mu, increment.1)?;
        if misfit_at(&p, &q)? <= baseline {
            return Ok(mu);
        }
    }
    Err(Error::StepsizeFailure { ell_max })
}

/// Which increment the outer loop uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateForm {
    /// `T(p, q) - (p, q)` from the data-side residuals.
    FixedPoint,
    /// Discrepancy form built from `(q - L)(u_i - g_i) - p (f(u_i) - f(g_i))`.
    Discrepancy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    /// Stop once the combined `L2` norm of the increment is at most `tol`.
    pub tol: f64,
    pub k_max: usize,
    pub theta: f64,
    pub ell_max: u32,
    /// Determinant floor relative to `max |det|`.
    pub det_floor_rel: f64,
    /// Increments below this fraction of `max(1, |(p, q)|)` count as round-off
    /// when no step length decreases the misfit.
    pub stationary_rel: f64,
    pub update: UpdateForm,
    pub solver: SolverOptions,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            k_max: 20,
            theta: 0.5,
            ell_max: 6,
            det_floor_rel: 1e-6,
            stationary_rel: 1e-8,
            update: UpdateForm::FixedPoint,
            solver: SolverOptions::default(),
        }
    }
}

/// Snapshot after the `k`-th update.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub p: Field,
    pub q: Field,
    /// Step length; `0` when the increment was already within tolerance and
    /// no update was applied.
    pub mu: f64,
    /// `sum_i |u_i(T_i) - g_i|_{L2}` at `(p, q)`.
    pub misfit: f64,
    pub increment_norm: f64,
    pub rel_err_p: Option<f64>,
    pub rel_err_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    /// Increment norm at or below `tol`.
    Converged,
    /// No step length lowers the misfit and the increment is at round-off level.
    Stationary,
    MaxIterations,
    StepsizeFailure,
    SolverFailure(Error),
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub initial_misfit: f64,
    pub records: Vec<IterateRecord>,
    pub stop: StopReason,
}

impl Reconstruction {
    pub fn last(&self) -> Option<&IterateRecord> {
        self.records.last()
    }

    /// Record of iterate `k`, if it was reached.
    pub fn iterate(&self, k: usize) -> Option<&IterateRecord> {
        self.records.iter().find(|r| r.k == k)
    }
}

/// Forward states and Caputo derivatives at the two observation times.
struct Evaluation {
    states: [Field; 2],
    caputo: [Field; 2],
}

/// Precomputed data-side quantities for one observation set.
pub struct Reconstructor<'a> {
    obs: &'a ObservationSet,
    template: &'a ProblemTemplate,
    opts: ReconstructionOptions,
    det_recip: Field,
    clamped: Vec<bool>,
    ops: [TridiagonalOperator; 2],
    times: [f64; 2],
    levels: [usize; 2],
}

impl<'a> Reconstructor<'a> {
    pub fn new(
        obs: &'a ObservationSet,
        template: &'a ProblemTemplate,
        opts: ReconstructionOptions,
    ) -> Result<Self> {
        obs.validate(template)?;
        let f = &template.nonlinearity;
        let det = determinant_field(&obs.g1, &obs.g2, f)?;
        let floor = opts.det_floor_rel * det.max_abs();
        if floor == 0.0 {
            return Err(Error::DegenerateObservations {
                clamped: det.len(),
                total: det.len(),
            });
        }
        let (det_recip, clamped) = safe_reciprocal(&det, floor)?;

        let grid = template.space_grid;
        let diffusivity = template.diffusivity.sample(&grid);
        let potential = template.potential.sample(&grid);
        let tg = template.time_grid;
        let (runs, times, levels) = match &obs.design {
            ObservationDesign::TwoRun(runs) => (
                [&runs[0], &runs[1]],
                [tg.horizon(); 2],
                [tg.n_steps(); 2],
            ),
            ObservationDesign::TwoTime { run, t1, t2 } => {
                let levels = [snap_level(&tg, *t1), snap_level(&tg, *t2)];
                ([run, run], [tg.time(levels[0]), tg.time(levels[1])], levels)
            }
        };
        let op = |run: &RunSetup| assemble(&diffusivity, &potential, &run.bc_left, &run.bc_right);
        let ops = [op(runs[0])?, op(runs[1])?];
        Ok(Self {
            obs,
            template,
            opts,
            det_recip,
            clamped,
            ops,
            times,
            levels,
        })
    }

    /// Nodes where the determinant was floored.
    pub fn clamped_nodes(&self) -> &[bool] {
        &self.clamped
    }

    /// Combined `L2` norm of `(dp, dq)` over the nodes where the pointwise
    /// update is meaningful: determinant not floored and no Dirichlet row.
    pub fn interior_norm(&self, dp: &Field, dq: &Field) -> f64 {
        let keep = |f: &Field| {
            let mut f = f.clone();
            for (j, v) in f.values_mut().iter_mut().enumerate() {
                if self.clamped[j] || self.ops.iter().any(|op| op.is_dirichlet_row(j)) {
                    *v = 0.0;
                }
            }
            f
        };
        combined_norm(&keep(dp), &keep(dq))
    }

    pub fn options(&self) -> &ReconstructionOptions {
        &self.opts
    }

    fn evaluate(&self, p: &Field, q: &Field) -> Result<Evaluation> {
        let solve = |run: &RunSetup| {
            let spec = self.template.instantiate(run, p.clone(), q.clone());
            solve_ibvp_with(&spec, &self.opts.solver)
        };
        let at = |traj: &Trajectory, m: usize| -> Result<(Field, Field)> {
            Ok((traj.state(m).clone(), traj.caputo_at(m)?))
        };
        let ((s1, c1), (s2, c2)) = match &self.obs.design {
            ObservationDesign::TwoRun(runs) => {
                let (a, b) = rayon::join(|| solve(&runs[0]), || solve(&runs[1]));
                (at(&a?, self.levels[0])?, at(&b?, self.levels[1])?)
            }
            ObservationDesign::TwoTime { run, .. } => {
                let traj = solve(run)?;
                (at(&traj, self.levels[0])?, at(&traj, self.levels[1])?)
            }
        };
        Ok(Evaluation {
            states: [s1, s2],
            caputo: [c1, c2],
        })
    }

    fn sources(&self) -> [&Source; 2] {
        match &self.obs.design {
            ObservationDesign::TwoRun(runs) => [&runs[0].source, &runs[1].source],
            ObservationDesign::TwoTime { run, .. } => [&run.source, &run.source],
        }
    }

    fn misfit(&self, eval: &Evaluation) -> Result<f64> {
        let mut total = 0.0;
        for (u, g) in eval.states.iter().zip(self.obs.g()) {
            total += sobolev_norm(&u.sub(g)?, SobolevOrder::L2);
        }
        Ok(total)
    }

    fn residuals(&self, eval: &Evaluation) -> Result<[Field; 2]> {
        let sources = self.sources();
        let g = self.obs.g();
        let r = |i: usize| residual_from_parts(&eval.caputo[i], sources[i], self.times[i], g[i], &self.ops[i]);
        Ok([r(0)?, r(1)?])
    }

    /// Copies coefficient values into nodes carrying Dirichlet rows.
    fn extend_boundary(&self, field: &mut Field) {
        let n = field.len();
        let dirichlet = |j: usize| self.ops.iter().any(|op| op.is_dirichlet_row(j));
        let v = field.values_mut();
        if n >= 2 && dirichlet(0) {
            v[0] = v[1];
        }
        if n >= 2 && dirichlet(n - 1) {
            v[n - 1] = v[n - 2];
        }
    }

    fn map_from(&self, eval: &Evaluation) -> Result<(Field, Field)> {
        let res = self.residuals(eval)?;
        let g = self.obs.g();
        let (mut p, mut q) =
            solve_pointwise([&res[0], &res[1]], g, &self.template.nonlinearity, &self.det_recip)?;
        self.extend_boundary(&mut p);
        self.extend_boundary(&mut q);
        Ok((p, q))
    }

    fn discrepancy_target(&self, eval: &Evaluation, p: &Field, q: &Field) -> Result<(Field, Field)> {
        let f = &self.template.nonlinearity;
        let g = self.obs.g();
        let dsc = |i: usize| -> Result<Field> {
            let diff = eval.states[i].sub(g[i])?;
            let l_diff = self.ops[i].apply(&diff)?;
            let f_diff = eval.states[i].zip_map(g[i], |u, gi| f.value(u) - f.value(gi))?;
            let grid = *diff.grid();
            let vals = (0..grid.len())
                .map(|j| {
                    q.values()[j] * diff.values()[j] - l_diff.values()[j]
                        - p.values()[j] * f_diff.values()[j]
                })
                .collect();
            Field::new(grid, vals)
        };
        let (d1, d2) = (dsc(0)?, dsc(1)?);
        let (ip, iq) = solve_pointwise([&d1, &d2], g, f, &self.det_recip)?;
        let mut tp = p.add(&ip)?;
        let mut tq = q.add(&iq)?;
        self.extend_boundary(&mut tp);
        self.extend_boundary(&mut tq);
        Ok((tp, tq))
    }

    /// `T(p, q)`: forward solves at `(p, q)` followed by the pointwise update.
    pub fn apply_map(&self, p: &Field, q: &Field) -> Result<(Field, Field)> {
        let eval = self.evaluate(p, q)?;
        self.map_from(&eval)
    }

    /// Data misfit `sum_i |u_i(p, q)(T_i) - g_i|_{L2}`.
    pub fn misfit_at(&self, p: &Field, q: &Field) -> Result<f64> {
        self.misfit(&self.evaluate(p, q)?)
    }

    /// Runs the outer loop from `init`; `truth` enables relative-error reporting.
    pub fn run(&self, init: (Field, Field), truth: Option<(&Field, &Field)>) -> Result<Reconstruction> {
        let (mut p, mut q) = init;
        p.check_same_grid(&self.obs.g1)?;
        q.check_same_grid(&self.obs.g1)?;
        let mut eval = match self.evaluate(&p, &q) {
            Ok(e) => e,
            Err(e) if e.is_solver_failure() => {
                return Ok(Reconstruction {
                    initial_misfit: f64::NAN,
                    records: Vec::new(),
                    stop: StopReason::SolverFailure(e),
                })
            }
            Err(e) => return Err(e),
        };
        let initial_misfit = self.misfit(&eval)?;
        let mut misfit = initial_misfit;
        let mut records = Vec::new();
        let mut stop = StopReason::MaxIterations;

        for k in 1..=self.opts.k_max {
            let (tp, tq) = match self.opts.update {
                UpdateForm::FixedPoint => self.map_from(&eval)?,
                UpdateForm::Discrepancy => self.discrepancy_target(&eval, &p, &q)?,
            };
            let inc_p = tp.sub(&p)?;
            let inc_q = tq.sub(&q)?;
            let increment_norm = combined_norm(&inc_p, &inc_q);

            let mut accepted: Option<Evaluation> = None;
            let mut hard_failure: Option<Error> = None;
            let step = step_size(
                |pt, qt| match self.evaluate(pt, qt) {
                    Ok(e) => {
                        let m = self.misfit(&e)?;
                        accepted = Some(e);
                        Ok(m)
                    }
                    Err(e) if e.is_solver_failure() => {
                        hard_failure = Some(e);
                        Ok(f64::INFINITY)
                    }
                    Err(e) => Err(e),
                },
                (&p, &q),
                (&inc_p, &inc_q),
                misfit,
                self.opts.theta,
                self.opts.ell_max,
            );
            let mu = match step {
                Ok(mu) => mu,
                // The increment is at tolerance or round-off level: the misfit sits
                // at its floor and no trial can beat it, so stop without moving.
                Err(Error::StepsizeFailure { .. })
                    if increment_norm <= self.opts.tol
                        || increment_norm <= self.opts.stationary_rel * combined_norm(&p, &q).max(1.0) =>
                {
                    let (rel_err_p, rel_err_q) = match truth {
                        Some((pt, qt)) => (Some(relative_error(&p, pt)?), Some(relative_error(&q, qt)?)),
                        None => (None, None),
                    };
                    records.push(IterateRecord {
                        k,
                        p: p.clone(),
                        q: q.clone(),
                        mu: 0.0,
                        misfit,
                        increment_norm,
                        rel_err_p,
                        rel_err_q,
                    });
                    stop = if increment_norm <= self.opts.tol {
                        StopReason::Converged
                    } else {
                        StopReason::Stationary
                    };
                    break;
                }
                Err(Error::StepsizeFailure { .. }) => {
                    stop = match hard_failure {
                        Some(e) if accepted.is_none() => StopReason::SolverFailure(e),
                        _ => StopReason::StepsizeFailure,
                    };
                    break;
                }
                Err(e) => return Err(e),
            };
            p = p.axpy(mu, &inc_p)?;
            q = q.axpy(mu, &inc_q)?;
            eval = accepted.expect("accepted step carries its forward evaluation");
            misfit = self.misfit(&eval)?;

            let (rel_err_p, rel_err_q) = match truth {
                Some((pt, qt)) => (Some(relative_error(&p, pt)?), Some(relative_error(&q, qt)?)),
                None => (None, None),
            };
            records.push(IterateRecord {
                k,
                p: p.clone(),
                q: q.clone(),
                mu,
                misfit,
                increment_norm,
                rel_err_p,
                rel_err_q,
            });
            if increment_norm <= self.opts.tol {
                stop = StopReason::Converged;
                break;
            }
        }

        Ok(Reconstruction {
            initial_misfit,
            records,
            stop,
        })
    }
}

/// `(|a|_{L2}^2 + |b|_{L2}^2)^{1/2}`.
pub fn combined_norm(a: &Field, b: &Field) -> f64 {
    sobolev_norm(a, SobolevOrder::L2).hypot(sobolev_norm(b, SobolevOrder::L2))
}

/// Runs the reconstruction loop for `obs` from `init`.
pub fn reconstruct(
    obs: &ObservationSet,
    template: &ProblemTemplate,
    init: (Field, Field),
    opts: ReconstructionOptions,
    truth: Option<(&Field, &Field)>,
) -> Result<Reconstruction> {
    Reconstructor::new(obs, template, opts)?.run(init, truth)
}

/// Outcome of [`contraction_probe`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    /// `|T(p, q) - act| / |(p, q) - act|` per successful sample.
    pub ratios: Vec<f64>,
    /// Samples dropped because a forward solve failed.
    pub failures: usize,
}

impl ProbeReport {
    pub fn worst(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::max)
    }

    pub fn median(&self) -> Option<f64> {
        if self.ratios.is_empty() {
            return None;
        }
        let mut sorted = self.ratios.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        Some(if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        })
    }
}

/// Empirical contraction ratio of `T` around `actual` over smooth random
/// perturbations of combined `L2` norm in `[rho / 2, rho]`.
pub fn contraction_probe(
    obs: &ObservationSet,
    template: &ProblemTemplate,
    actual: (&Field, &Field),
    rho: f64,
    n_samples: usize,
    seed: u64,
    opts: ReconstructionOptions,
) -> Result<ProbeReport> {
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("probe radius must be positive, got {rho}")));
    }
    let engine = Reconstructor::new(obs, template, opts)?;
    let grid = template.space_grid;
    let (x0, len) = (grid.x_min(), grid.x_max() - grid.x_min());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = Uniform::new_inclusive(0.5 * rho, rho).expect("valid radius range");
    let smooth_bump = |rng: &mut ChaCha8Rng| {
        let coeffs: Vec<f64> = (0..8)
            .map(|k| {
                let z: f64 = StandardNormal.sample(rng);
                z / (1.0 + k as f64)
            })
            .collect();
        Field::from_fn(grid, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k as f64 * std::f64::consts::PI * (x - x0) / len).cos())
                .sum()
        })
    };
    let perturbations: Vec<(Field, Field)> = (0..n_samples)
        .filter_map(|_| {
            let dp = smooth_bump(&mut rng);
            let dq = smooth_bump(&mut rng);
            let size = combined_norm(&dp, &dq);
            let target = radius.sample(&mut rng);
            (size > 0.0).then(|| (dp.scaled(target / size), dq.scaled(target / size)))
        })
        .collect();

    let outcomes: Vec<Result<f64>> = perturbations
        .par_iter()
        .map(|(dp, dq)| {
            let p = actual.0.add(dp)?;
            let q = actual.1.add(dq)?;
            let (tp, tq) = engine.apply_map(&p, &q)?;
            let num = combined_norm(&tp.sub(actual.0)?, &tq.sub(actual.1)?);
            Ok(num / combined_norm(dp, dq))
        })
        .collect();

    let mut report = ProbeReport {
        ratios: Vec::new(),
        failures: 0,
    };
    for outcome in outcomes {
        match outcome {
            Ok(r) => report.ratios.push(r),
            Err(e) if e.is_solver_failure() => {
                warn!("contraction probe sample dropped: {e}");
                report.failures += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
