//! Forward solver: fully implicit L1 time stepping of
//!
//! ```text
//! D_t^alpha u + L u = q u - p f(u) + r,   B u = a,   u(0) = u0,
//! ```
//!
//! the steady-state problem `L u = q u - p f(u) + r_inf`, and decay diagnostics.
//!
//! Each step solves the nonlinear system by damped Newton with the exact
//! tridiagonal Jacobian `scale I + L - diag(q) + diag(p f'(u))`.

use crate::elliptic::{assemble, SobolevOrder, TridiagonalOperator};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::fit::{least_squares_slope, loglog_slope};
use crate::fractional::{l1_weights, L1Weights};
use crate::grid::TimeGrid;
use crate::problem::ProblemSpec;

/// Newton and safeguard settings for forward solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Sup-norm Newton residual tolerance, relative to `max(1, |rhs|_inf)`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Smallest damping factor tried before declaring divergence.
    pub min_damping: f64,
    /// `|u|_inf` above this aborts the solve with [`Error::BlowUp`].
    pub blowup_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            min_damping: 1.0 / 64.0,
            blowup_cap: 1e6,
        }
    }
}

/// Stored solution history `u(t_m)`, `m = 0..=n_steps`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    time_grid: TimeGrid,
    weights: L1Weights,
    states: Vec<Field>,
}

impl Trajectory {
    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn weights(&self) -> &L1Weights {
        &self.weights
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn state(&self, m: usize) -> &Field {
        &self.states[m]
    }

    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// L1 Caputo derivative of the stored history at level `m`.
    pub fn caputo_at(&self, m: usize) -> Result<Field> {
        self.weights.caputo_field(&self.states, m)
    }
}

/// Caputo derivative of `traj` at time level `m >= 1`.
pub fn caputo_at_time(traj: &Trajectory, m: usize) -> Result<Field> {
    traj.caputo_at(m)
}

pub fn solve_ibvp(spec: &ProblemSpec) -> Result<Trajectory> {
    solve_ibvp_with(spec, &SolverOptions::default())
}

/// Time-steps the initial-boundary value problem over the whole time grid.
pub fn solve_ibvp_with(spec: &ProblemSpec, opts: &SolverOptions) -> Result<Trajectory> {
    spec.validate()?;
    let op = assemble(&spec.diffusivity, &spec.potential, &spec.bc_left, &spec.bc_right)?;
    check_initial_data(spec)?;

    let tg = spec.time_grid;
    let grid = spec.space_grid;
    let n = grid.len();
    let weights = l1_weights(spec.alpha, tg.dt(), tg.n_steps())?;
    let scale = weights.scale();
    let stepper = op.shifted(&vec![scale; n])?;

    let mut states = Vec::with_capacity(tg.n_steps() + 1);
    states.push(spec.u0.clone());
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(tg.n_steps());
    let mut memory = vec![0.0; n];

    for m in 1..=tg.n_steps() {
        let t = tg.time(m);
        weights.memory_sum(&increments, m, &mut memory);
        let prev = states[m - 1].values();
        let load = op.boundary_load(t);
        let mut rhs = vec![0.0; n];
        for (j, (((b, &u), &h), &l)) in rhs
            .iter_mut()
            .zip(prev)
            .zip(&memory)
            .zip(load.values())
            .enumerate()
        {
            *b = if op.is_dirichlet_row(j) {
                l
            } else {
                scale * (u - h) + l + spec.source.eval(t, grid.node(j))
            };
        }
        let mut guess = prev.to_vec();
        for j in [0, n - 1] {
            if op.is_dirichlet_row(j) {
                guess[j] = rhs[j];
            }
        }
        let u = newton_solve(&stepper, spec, &rhs, guess, opts, t)?;
        let magnitude = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(magnitude <= opts.blowup_cap) {
            return Err(Error::BlowUp { time: t, magnitude });
        }
        increments.push(u.iter().zip(prev).map(|(a, b)| a - b).collect());
        states.push(Field::new(grid, u)?);
    }

    Ok(Trajectory {
        time_grid: tg,
        weights,
        states,
    })
}

fn check_initial_data(spec: &ProblemSpec) -> Result<()> {
    let u0 = spec.u0.values();
    let last = u0.len() - 1;
    for (side, bc, value) in [("left", &spec.bc_left, u0[0]), ("right", &spec.bc_right, u0[last])] {
        if bc.is_dirichlet() {
            let a = bc.value_at(0.0);
            if (value - a).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(Error::InitialDataMismatch { side });
            }
        }
    }
    Ok(())
}

/// Damped Newton for `M u - q u + p f(u) = b` on non-Dirichlet rows and
/// `u_j = b_j` on Dirichlet rows, where `M` is `base` (already shifted).
fn newton_solve(
    base: &TridiagonalOperator,
    spec: &ProblemSpec,
    rhs: &[f64],
    mut u: Vec<f64>,
    opts: &SolverOptions,
    time: f64,
) -> Result<Vec<f64>> {
    let f = &spec.nonlinearity;
    let p = spec.p.values();
    let q = spec.q.values();
    let reference = rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let target = opts.newton_tol * reference;
    let n = u.len();
    let dirichlet: Vec<bool> = (0..n).map(|j| base.is_dirichlet_row(j)).collect();

    let residual = |u: &[f64]| -> Vec<f64> {
        let mut r = base.multiply(u);
        for j in 0..n {
            if !dirichlet[j] {
                r[j] += -q[j] * u[j] + p[j] * f.value(u[j]);
            }
            r[j] -= rhs[j];
        }
        r
    };
    let sup_norm = |r: &[f64]| r.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut res = residual(&u);
    let mut res_norm = sup_norm(&res);
    for _ in 0..opts.max_newton {
        if res_norm <= target {
            return Ok(u);
        }
        let shift: Vec<f64> = (0..n).map(|j| -q[j] + p[j] * f.derivative(u[j])).collect();
        let jac = base.shifted(&shift)?;
        let neg: Vec<f64> = res.iter().map(|v| -v).collect();
        let step = crate::elliptic::thomas(jac.sub(), jac.diag(), jac.sup(), &neg)?;

        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a + damping * d).collect();
            let trial_res = residual(&trial);
            let trial_norm = sup_norm(&trial_res);
            if trial_norm <= res_norm {
                u = trial;
                res = trial_res;
                res_norm = trial_norm;
                break;
            }
            damping *= 0.5;
            if damping < opts.min_damping {
                return Err(Error::NewtonDivergence {
                    time,
                    residual: res_norm / reference,
                });
            }
        }
    }
    if res_norm <= target {
        return Ok(u);
    }
    Err(Error::NewtonDivergence {
        time,
        residual: res_norm / reference,
    })
}

/// Steady state `L u = q u - p f(u) + r_inf`, Newton from `spec.u0`.
///
/// Boundary data are frozen at their value at the time horizon.
pub fn solve_steady(spec: &ProblemSpec, r_inf: &Field) -> Result<Field> {
    solve_steady_from(spec, r_inf, &spec.u0, &SolverOptions::default())
}

/// [`solve_steady`] with an explicit initial guess.
pub fn solve_steady_from(
    spec: &ProblemSpec,
    r_inf: &Field,
    guess: &Field,
    opts: &SolverOptions,
) -> Result<Field> {
    spec.validate()?;
    r_inf.check_same_grid(&spec.u0)?;
    guess.check_same_grid(&spec.u0)?;
    let op = assemble(&spec.diffusivity, &spec.potential, &spec.bc_left, &spec.bc_right)?;
    let t = spec.time_grid.horizon();
    let load = op.boundary_load(t);
    let n = spec.space_grid.len();
    let mut rhs = vec![0.0; n];
    let mut u = guess.values().to_vec();
    for j in 0..n {
        if op.is_dirichlet_row(j) {
            rhs[j] = load.values()[j];
            u[j] = rhs[j];
        } else {
            rhs[j] = r_inf.values()[j] + load.values()[j];
        }
    }
    let u = newton_solve(&op, spec, &rhs, u, opts, f64::INFINITY)?;
    Field::new(spec.space_grid, u)
}

/// Distance of a trajectory from a steady state over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `(t_m, |u(t_m) - u_inf|_{H1}^2)` for every level.
    pub curve: Vec<(f64, f64)>,
    /// Slope of `ln dist` against `ln t` over the last decade of time.
    pub loglog_slope: Option<f64>,
    /// Slope of `ln dist` against `t` over the last decade of time.
    pub loglinear_slope: Option<f64>,
}

pub fn decay_diagnostic(traj: &Trajectory, u_inf: &Field) -> Result<DecayReport> {
    let curve = traj
        .states()
        .iter()
        .zip(traj.time_grid().times())
        .map(|(u, t)| {
            let diff = u.sub(u_inf)?;
            Ok((t, crate::elliptic::sobolev_norm(&diff, SobolevOrder::H1).powi(2)))
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = traj.time_grid().horizon();
    let window: Vec<(f64, f64)> = curve
        .iter()
        .copied()
        .filter(|&(t, d)| t >= 0.1 * horizon && d > 0.0)
        .collect();
    let loglog = loglog_slope(&window);
    let loglinear = least_squares_slope(&window.iter().map(|&(t, d)| (t, d.ln())).collect::<Vec<_>>());
    Ok(DecayReport {
        curve,
        loglog_slope: loglog,
        loglinear_slope: loglinear,
    })
}
