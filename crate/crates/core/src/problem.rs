//! Problem definitions: sources, per-run settings, templates and the
//! fully sampled [`ProblemSpec`] consumed by the forward solver.

use std::fmt;
use std::sync::Arc;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::field::{Field, Profile};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::nonlinearity::Nonlinearity;

/// Source term `r(t, x)`.
#[derive(Clone)]
pub struct Source(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>);

impl Source {
    pub fn new(r: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(r))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_, _| c)
    }

    /// `a + b x`, constant in time.
    pub fn affine_in_x(a: f64, b: f64) -> Self {
        Self::new(move |_, x| a + b * x)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        (self.0)(t, x)
    }

    pub fn sample(&self, t: f64, grid: &SpatialGrid) -> Field {
        Field::from_fn(*grid, |x| self.eval(t, x))
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Source(..)")
    }
}

/// Everything defining one forward initial-boundary value problem, sampled on grids.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub diffusivity: Field,
    pub potential: Field,
    pub nonlinearity: Nonlinearity,
    pub p: Field,
    pub q: Field,
    pub source: Source,
    pub u0: Field,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
    pub time_grid: TimeGrid,
    pub space_grid: SpatialGrid,
}

impl ProblemSpec {
    /// `D = 1`, `d = 0`, `p = q = 0`, `r = 0`, `u0 = 0`, homogeneous Neumann at both ends.
    pub fn homogeneous(
        space_grid: SpatialGrid,
        time_grid: TimeGrid,
        alpha: f64,
        nonlinearity: Nonlinearity,
    ) -> Self {
        Self {
            alpha,
            diffusivity: Field::constant(space_grid, 1.0),
            potential: Field::zeros(space_grid),
            nonlinearity,
            p: Field::zeros(space_grid),
            q: Field::zeros(space_grid),
            source: Source::zero(),
            u0: Field::zeros(space_grid),
            bc_left: BoundaryCondition::neumann(0.0),
            bc_right: BoundaryCondition::neumann(0.0),
            time_grid,
            space_grid,
        }
    }

    /// Checks the structural invariants (grids, ellipticity, order range).
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "fractional order must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        for (name, field) in [
            ("diffusivity", &self.diffusivity),
            ("potential", &self.potential),
            ("p", &self.p),
            ("q", &self.q),
            ("u0", &self.u0),
        ] {
            if *field.grid() != self.space_grid {
                return Err(Error::GridMismatch(format!("{name} is not on the problem grid")));
            }
            if !field.is_finite() {
                return Err(Error::Config(format!("{name} has non-finite values")));
            }
        }
        if self.diffusivity.min() <= 0.0 {
            return Err(Error::Config("diffusivity must be positive".into()));
        }
        if self.potential.min() < 0.0 {
            return Err(Error::Config("potential d must be non-negative".into()));
        }
        for bc in [&self.bc_left, &self.bc_right] {
            if let Some(beta) = bc.robin_coefficient() {
                if beta < 0.0 {
                    return Err(Error::Config("impedance coefficient must be >= 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn with_coefficients(mut self, p: Field, q: Field) -> Self {
        self.p = p;
        self.q = q;
        self
    }
}

/// The per-experiment excitation: source, initial state and boundary conditions.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub source: Source,
    pub u0: Profile,
    pub bc_left: BoundaryCondition,
    pub bc_right: BoundaryCondition,
}

impl RunSetup {
    /// Zero initial state with homogeneous Neumann conditions.
    pub fn with_source(source: Source) -> Self {
        Self {
            source,
            u0: Profile::constant(0.0),
            bc_left: BoundaryCondition::neumann(0.0),
            bc_right: BoundaryCondition::neumann(0.0),
        }
    }
}

/// Medium and discretization shared by all runs of an experiment; the
/// coefficient pair `(p, q)` and the excitation are supplied per solve.
#[derive(Debug, Clone)]
pub struct ProblemTemplate {
    pub alpha: f64,
    pub nonlinearity: Nonlinearity,
    pub diffusivity: Profile,
    pub potential: Profile,
    pub space_grid: SpatialGrid,
    pub time_grid: TimeGrid,
}

impl ProblemTemplate {
    pub fn new(
        alpha: f64,
        nonlinearity: Nonlinearity,
        space_grid: SpatialGrid,
        time_grid: TimeGrid,
    ) -> Self {
        Self {
            alpha,
            nonlinearity,
            diffusivity: Profile::constant(1.0),
            potential: Profile::constant(0.0),
            space_grid,
            time_grid,
        }
    }

    pub fn instantiate(&self, run: &RunSetup, p: Field, q: Field) -> ProblemSpec {
        ProblemSpec {
            alpha: self.alpha,
            diffusivity: self.diffusivity.sample(&self.space_grid),
            potential: self.potential.sample(&self.space_grid),
            nonlinearity: self.nonlinearity.clone(),
            p,
            q,
            source: run.source.clone(),
            u0: run.u0.sample(&self.space_grid),
            bc_left: run.bc_left.clone(),
            bc_right: run.bc_right.clone(),
            time_grid: self.time_grid,
            space_grid: self.space_grid,
        }
    }

    /// Same problem with `factor` times as many cells and time steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            space_grid: self.space_grid.refined(factor),
            time_grid: self.time_grid.refined(factor),
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        let dt = self.time_grid.dt();
        let n_steps = (horizon / dt).round().max(1.0) as usize;
        Ok(Self {
            time_grid: TimeGrid::new(n_steps, horizon)?,
            ..self.clone()
        })
    }
}

/// Ground-truth `p`: a Gaussian bump of height 1 at `x = 0.5` on a 0.15 baseline.
pub fn phantom_p() -> Profile {
    Profile::new(|x| 0.15 + (-((x - 0.5) / 0.1).powi(2)).exp())
}

/// Ground-truth `q`: a Gaussian bump of height 7 at `x = 0.7` on a 0.5 baseline.
pub fn phantom_q() -> Profile {
    Profile::new(|x| 0.5 + 7.0 * (-((x - 0.7) / 0.1).powi(2)).exp())
}

/// Phantom coefficient pair `(p_act, q_act)` sampled on `grid`.
pub fn make_phantoms(grid: &SpatialGrid) -> (Field, Field) {
    (phantom_p().sample(grid), phantom_q().sample(grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phantom_anchor_values() {
        let grid = SpatialGrid::unit(50).unwrap();
        let (p, q) = make_phantoms(&grid);
        let at = |f: &Field, x: f64| f.values()[(x * 50.0).round() as usize];
        assert!((at(&p, 0.5) - 1.15).abs() < 1e-12);
        assert!((at(&q, 0.7) - 7.5).abs() < 1e-12);
        assert!((at(&p, 0.0) - 0.15).abs() < 5e-5);
        assert!((at(&q, 0.0) - 0.5).abs() < 5e-5);
        // tabulated ground-truth curve values, four decimals
        for (x, expected) in [(0.4, 0.5179), (0.42, 0.6773), (0.6, 0.5179), (0.68, 0.1892)] {
            assert!((at(&p, x) - expected).abs() < 5e-5, "p({x})");
        }
    }

    #[test]
    fn validation_catches_bad_medium() {
        let grid = SpatialGrid::unit(10).unwrap();
        let time = TimeGrid::new(10, 1.0).unwrap();
        let f = Nonlinearity::builtin("f1").unwrap();
        let spec = ProblemSpec::homogeneous(grid, time, 0.5, f.clone());
        assert!(spec.validate().is_ok());

        let mut bad = spec.clone();
        bad.alpha = 1.5;
        assert!(matches!(bad.validate(), Err(Error::Config(_))));

        let mut bad = spec.clone();
        bad.diffusivity = Field::zeros(grid);
        assert!(matches!(bad.validate(), Err(Error::Config(_))));

        let mut bad = spec.clone();
        bad.potential = Field::constant(grid, -1.0);
        assert!(bad.validate().is_err());

        let mut bad = spec;
        bad.p = Field::zeros(SpatialGrid::unit(5).unwrap());
        assert!(matches!(bad.validate(), Err(Error::GridMismatch(_))));
    }
}
