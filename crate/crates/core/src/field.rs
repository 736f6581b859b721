//! Node-valued functions on a [`SpatialGrid`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// A function of space sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: SpatialGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: SpatialGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.nodes().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Nodewise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Field) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Result<Self> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Injection onto a coarser grid whose nodes are a subset of ours.
    pub fn restrict_to(&self, coarse: &SpatialGrid) -> Result<Self> {
        let stride = coarse.refinement_stride(&self.grid).ok_or_else(|| {
            Error::GridMismatch(format!("{coarse:?} is not a coarsening of {:?}", self.grid))
        })?;
        Ok(Self {
            grid: *coarse,
            values: self.values.iter().step_by(stride).copied().collect(),
        })
    }
}

/// A function of one spatial variable, sampled onto grids on demand.
#[derive(Clone)]
pub struct Profile(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Profile {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.0)(x)
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Field {
        Field::from_fn(*grid, |x| self.eval(x))
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Profile(..)")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn length_must_match_grid() {
        let g = SpatialGrid::unit(4).unwrap();
        assert!(Field::new(g, vec![0.0; 4]).is_err());
        assert!(Field::new(g, vec![0.0; 5]).is_ok());
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = Field::zeros(SpatialGrid::unit(4).unwrap());
        let b = Field::zeros(SpatialGrid::unit(8).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #[test]
        fn restriction_reproduces_coarse_sampling(n in 1usize..60, a in -3.0f64..3.0, w in 0.5f64..8.0) {
            let coarse = SpatialGrid::new(n, -1.0, 2.0).unwrap();
            let fine = coarse.refined(2);
            let f = |x: f64| (w * x).sin() + a * x * x;
            let restricted = Field::from_fn(fine, f).restrict_to(&coarse).unwrap();
            prop_assert_eq!(restricted, Field::from_fn(coarse, f));
        }
    }
}
