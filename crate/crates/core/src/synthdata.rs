//! Synthetic observations: forward solves at the ground-truth coefficients,
//! optional generation on a refined discretization, and smoothed measurement noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::boundary::BoundaryCondition;
use crate::elliptic::{assemble, sobolev_norm, SobolevOrder};
use crate::error::{Error, Result};
use crate::field::{Field, Profile};
use crate::forward::{solve_ibvp_with, SolverOptions};
use crate::inverse::{ObservationDesign, ObservationSet};
use crate::problem::ProblemTemplate;

/// Discretization used to generate data relative to the inversion discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrimeMode {
    /// Same space and time grids as the inversion ("inverse crime").
    SameGrid,
    /// Twice as many cells and time steps, injected back onto the inversion grid.
    Refined2x,
}

/// Solves the forward problem(s) at `(p_act, q_act)` and records `g1`, `g2`.
pub fn generate_observations(
    p_act: &Profile,
    q_act: &Profile,
    template: &ProblemTemplate,
    design: ObservationDesign,
    crime: CrimeMode,
    opts: &SolverOptions,
) -> Result<ObservationSet> {
    let generator = match crime {
        CrimeMode::SameGrid => template.clone(),
        CrimeMode::Refined2x => template.refined(2),
    };
    let fine = generator.space_grid;
    let coarse = template.space_grid;
    let p = p_act.sample(&fine);
    let q = q_act.sample(&fine);

    let (g1, g2) = match &design {
        ObservationDesign::TwoRun(runs) => {
            let solve = |i: usize| {
                let spec = generator.instantiate(&runs[i], p.clone(), q.clone());
                solve_ibvp_with(&spec, opts).and_then(|t| t.final_state().restrict_to(&coarse))
            };
            let (a, b) = rayon::join(|| solve(0), || solve(1));
            (a?, b?)
        }
        ObservationDesign::TwoTime { run, t1, t2 } => {
            let spec = generator.instantiate(run, p, q);
            let traj = solve_ibvp_with(&spec, opts)?;
            let tg = traj.time_grid();
            let (m1, _) = tg.nearest_level(*t1);
            let (m2, _) = tg.nearest_level(*t2);
            (
                traj.state(m1).restrict_to(&coarse)?,
                traj.state(m2).restrict_to(&coarse)?,
            )
        }
    };
    ObservationSet::new(design, g1, g2, template)
}

/// Adds Gaussian noise smoothed by `(I - s^2 D_xx)^{-2}` (homogeneous Neumann
/// rows) and rescaled so that its `H2` norm equals `delta * |g|_{H2}`.
///
/// `smoothing_length` defaults to two cell widths.
pub fn add_noise(g: &Field, delta: f64, smoothing_length: Option<f64>, seed: u64) -> Result<Field> {
    if !(delta >= 0.0) {
        return Err(Error::Config(format!("noise level must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(g.clone());
    }
    let grid = *g.grid();
    let s = smoothing_length.unwrap_or(2.0 * grid.h());
    let raw = white_noise(&grid, seed);
    let smoothed = smooth(&raw, s)?;
    let size = sobolev_norm(&smoothed, SobolevOrder::H2);
    let target = delta * sobolev_norm(g, SobolevOrder::H2);
    if size == 0.0 {
        return Ok(g.clone());
    }
    g.axpy(target / size, &smoothed)
}

/// Standard normal node values, deterministic in `seed`.
pub fn white_noise(grid: &crate::grid::SpatialGrid, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..grid.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    Field::new(*grid, values).expect("one value per node")
}

/// Applies the Helmholtz-squared filter `(I - s^2 D_xx)^{-2}`.
pub fn smooth(noise: &Field, s: f64) -> Result<Field> {
    let grid = *noise.grid();
    let bc = BoundaryCondition::neumann(0.0);
    let helmholtz = assemble(
        &Field::constant(grid, s * s),
        &Field::constant(grid, 1.0),
        &bc,
        &bc,
    )?;
    helmholtz.solve(&helmholtz.solve(noise)?)
}

/// `|rec - act|_{L2} / |act|_{L2}`.
pub fn relative_error(rec: &Field, act: &Field) -> Result<f64> {
    let denom = sobolev_norm(act, SobolevOrder::L2);
    if denom == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    Ok(sobolev_norm(&rec.sub(act)?, SobolevOrder::L2) / denom)
}
