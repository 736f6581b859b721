//! L1 discretization of the Djirbashian-Caputo derivative on a uniform time mesh.
//!
//! For `v^m = v(t_m)` the derivative at level `m >= 1` is approximated by
//!
//! ```text
//! scale * sum_{j=0}^{m-1} b_j (v^{m-j} - v^{m-j-1}),
//! b_j = (j+1)^{1-alpha} - j^{1-alpha},   scale = dt^{-alpha} / Gamma(2 - alpha).
//! ```
//!
//! At `alpha = 1` the weights collapse to `b = [1, 0, 0, ...]` and the scheme is
//! the backward difference quotient.

use crate::error::{Error, Result};
use crate::field::Field;

/// Precomputed L1 weights for a fixed order and step size.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    alpha: f64,
    dt: f64,
    b: Vec<f64>,
    scale: f64,
}

/// Weights `b_0..b_{n_steps-1}` for order `alpha` and step `dt`.
pub fn l1_weights(alpha: f64, dt: f64, n_steps: usize) -> Result<L1Weights> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!(
            "fractional order must lie in (0, 1], got {alpha}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let e = 1.0 - alpha;
    let b = (0..n_steps.max(1))
        .map(|j| {
            if j == 0 {
                1.0
            } else if alpha == 1.0 {
                0.0
            } else {
                let j = j as f64;
                (j + 1.0).powf(e) - j.powf(e)
            }
        })
        .collect();
    let scale = dt.powf(-alpha) / libm::tgamma(2.0 - alpha);
    Ok(L1Weights { alpha, dt, b, scale })
}

impl L1Weights {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_level(&self, m: usize, available: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::Precondition(
                "Caputo derivative at the initial level is not defined by the L1 sum".into(),
            ));
        }
        if m >= available {
            return Err(Error::Precondition(format!(
                "history has {available} levels, level {m} requested"
            )));
        }
        if m > self.b.len() {
            return Err(Error::Precondition(format!(
                "weights cover {} steps, level {m} requested",
                self.b.len()
            )));
        }
        Ok(())
    }

    /// L1 derivative of a scalar history at level `m`.
    pub fn caputo_scalar(&self, history: &[f64], m: usize) -> Result<f64> {
        self.check_level(m, history.len())?;
        let sum: f64 = (0..m)
            .map(|j| self.b[j] * (history[m - j] - history[m - j - 1]))
            .sum();
        Ok(self.scale * sum)
    }

    /// L1 derivative of a field history at level `m`, nodewise.
    pub fn caputo_field(&self, history: &[Field], m: usize) -> Result<Field> {
        self.check_level(m, history.len())?;
        let grid = *history[m].grid();
        let mut out = vec![0.0; grid.len()];
        for j in 0..m {
            let (newer, older) = (&history[m - j], &history[m - j - 1]);
            newer.check_same_grid(older)?;
            let bj = self.b[j];
            for ((o, a), b) in out.iter_mut().zip(newer.values()).zip(older.values()) {
                *o += bj * (a - b);
            }
        }
        for o in &mut out {
            *o *= self.scale;
        }
        Field::new(grid, out)
    }

    /// History part `sum_{j=1}^{m-1} b_j d^{m-j}` of the L1 sum at level `m`,
    /// where `increments[k] = v^{k+1} - v^k`. Excludes the `j = 0` term.
    pub(crate) fn memory_sum(&self, increments: &[Vec<f64>], m: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for j in 1..m {
            let bj = self.b[j];
            if bj == 0.0 {
                continue;
            }
            let d = &increments[m - j - 1];
            for (o, v) in out.iter_mut().zip(d) {
                *o += bj * v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn backward_euler_limit() {
        let w = l1_weights(1.0, 0.01, 5).unwrap();
        assert_eq!(w.b(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((w.scale() - 100.0).abs() < 1e-12);
    }

    #[test]
    fn first_weights() {
        for alpha in [0.1, 0.5, 0.9, 1.0] {
            assert_eq!(l1_weights(alpha, 0.1, 3).unwrap().b()[0], 1.0);
        }
        let w = l1_weights(0.5, 0.1, 3).unwrap();
        assert!((w.b()[1] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((w.b()[1] - 0.414214).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(matches!(l1_weights(0.0, 0.1, 3), Err(Error::Config(_))));
        assert!(matches!(l1_weights(1.2, 0.1, 3), Err(Error::Config(_))));
        assert!(matches!(l1_weights(0.5, 0.0, 3), Err(Error::Config(_))));
    }

    #[test]
    fn level_zero_is_rejected() {
        let w = l1_weights(0.5, 0.1, 3).unwrap();
        assert!(matches!(w.caputo_scalar(&[1.0, 2.0], 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_and_linear_histories() {
        let w = l1_weights(0.7, 0.05, 20).unwrap();
        let constant = vec![3.0; 21];
        assert_eq!(w.caputo_scalar(&constant, 20).unwrap(), 0.0);

        let dt = 0.05;
        let w1 = l1_weights(1.0, dt, 20).unwrap();
        let linear: Vec<f64> = (0..=20).map(|m| m as f64 * dt).collect();
        for m in 1..=20 {
            assert!((w1.caputo_scalar(&linear, m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_history_converges_to_closed_form() {
        // d^alpha t / dt^alpha = t^{1-alpha} / Gamma(2-alpha); at t = 1, alpha = 1/2: 2/sqrt(pi)
        let exact = 2.0 / std::f64::consts::PI.sqrt();
        assert!((exact - 1.12838).abs() < 1e-5);
        for n in [16usize, 64, 256] {
            let dt = 1.0 / n as f64;
            let w = l1_weights(0.5, dt, n).unwrap();
            let v: Vec<f64> = (0..=n).map(|m| m as f64 * dt).collect();
            // L1 is exact for piecewise-linear histories
            assert!((w.caputo_scalar(&v, n).unwrap() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn field_history_matches_scalar_history() {
        let grid = SpatialGrid::unit(4).unwrap();
        let w = l1_weights(0.6, 0.1, 10).unwrap();
        let hist: Vec<Field> = (0..=10)
            .map(|m| Field::from_fn(grid, |x| (m as f64 * 0.1).powi(2) * (1.0 + x)))
            .collect();
        let d = w.caputo_field(&hist, 10).unwrap();
        for (j, x) in grid.nodes().enumerate() {
            let scalar: Vec<f64> = hist.iter().map(|f| f.values()[j]).collect();
            let expected = w.caputo_scalar(&scalar, 10).unwrap();
            assert!((d.values()[j] - expected).abs() < 1e-12, "node {x}");
        }
    }

    proptest! {
        #[test]
        fn weights_telescope_and_decrease(alpha in 0.01f64..0.99, n in 1usize..400) {
            let w = l1_weights(alpha, 0.01, n).unwrap();
            let sum: f64 = w.b().iter().sum();
            prop_assert!((sum - (n as f64).powf(1.0 - alpha)).abs() < 1e-12 * (n as f64));
            prop_assert!(w.b().windows(2).all(|p| p[1] < p[0]));
        }

        #[test]
        fn caputo_is_linear(a in -3.0f64..3.0, c in -3.0f64..3.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
            let combo: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + c * y).collect();
            let w = l1_weights(0.4, 0.02, 29).unwrap();
            let lhs = w.caputo_scalar(&combo, 29).unwrap();
            let rhs = a * w.caputo_scalar(&u, 29).unwrap() + c * w.caputo_scalar(&v, 29).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()) * w.scale());
        }
    }

    #[test]
    fn discrete_coercivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let alpha = rng.random_range(0.05..1.0);
            let n = 50;
            let dt = 1.0 / n as f64;
            let (a0, a1, a2, om) = (
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(0.5..8.0),
            );
            let v: Vec<f64> = (0..=n)
                .map(|m| {
                    let t = m as f64 * dt;
                    a0 + a1 * t + a2 * (om * t).sin()
                })
                .collect();
            let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
            let w = l1_weights(alpha, dt, n).unwrap();
            for m in 1..=n {
                let gap = v[m] * w.caputo_scalar(&v, m).unwrap() - 0.5 * w.caputo_scalar(&v2, m).unwrap();
                assert!(gap >= -1e-8, "alpha {alpha} level {m}: {gap}");
            }
        }
    }
}
