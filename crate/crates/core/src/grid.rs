//! Uniform space and time grids.

use crate::error::{Error, Result};

/// Uniform vertex-centered grid on `[x_min, x_max]` with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    n_cells: usize,
    x_min: f64,
    x_max: f64,
}

impl SpatialGrid {
    pub fn new(n_cells: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Config("spatial grid needs at least one cell".into()));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Config(format!(
                "invalid interval [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            n_cells,
            x_min,
            x_max,
        })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(n_cells, 0.0, 1.0)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Number of nodes, `n_cells + 1`.
    pub fn len(&self) -> usize {
        self.n_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + (self.x_max - self.x_min) * j as f64 / self.n_cells as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }

    /// Same interval with `factor` times as many cells.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_cells: self.n_cells * factor.max(1),
            ..*self
        }
    }

    /// Node stride `s` such that node `j` of `self` is node `s * j` of `fine`.
    pub fn refinement_stride(&self, fine: &SpatialGrid) -> Option<usize> {
        if self.x_min != fine.x_min || self.x_max != fine.x_max {
            return None;
        }
        if fine.n_cells % self.n_cells != 0 {
            return None;
        }
        Some(fine.n_cells / self.n_cells)
    }
}

/// Uniform time grid `t_m = m * dt`, `m = 0..=n_steps`, `dt = horizon / n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_steps: usize,
    horizon: f64,
}

impl TimeGrid {
    pub fn new(n_steps: usize, horizon: f64) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { n_steps, horizon })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.n_steps {
            self.horizon
        } else {
            self.horizon * m as f64 / self.n_steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |m| self.time(m))
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n_steps: self.n_steps * factor.max(1),
            ..*self
        }
    }

    /// Index of the level nearest to `t`, and whether `t` lies on the grid.
    pub fn nearest_level(&self, t: f64) -> (usize, bool) {
        let raw = t / self.dt();
        let m = raw.round().clamp(0.0, self.n_steps as f64) as usize;
        let on_grid = (self.time(m) - t).abs() <= 1e-9 * self.horizon.max(1.0);
        (m, on_grid)
    }
}
