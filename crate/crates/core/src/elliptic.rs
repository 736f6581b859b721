//! Finite-difference assembly of `L = -(D u')' + d u` with endpoint conditions,
//! tridiagonal solves and discrete Sobolev norms.
//!
//! Interior rows use the three-point stencil with arithmetic midpoint
//! diffusivities. Dirichlet rows are replaced by identity rows; Neumann and
//! impedance rows eliminate a ghost node through the centered flux condition,
//! which leaves an inhomogeneous load `2 D_{1/2} a(t) / h` on that row.

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Dirichlet,
    /// Ghost-eliminated flux row; `weight * a(t)` is its boundary load.
    Flux { weight: f64 },
}

/// Tridiagonal matrix `sub / diag / sup` over the nodes of a grid, together
/// with the boundary conditions its endpoint rows encode.
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    grid: SpatialGrid,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    left: RowKind,
    right: RowKind,
    bc_left: BoundaryCondition,
    bc_right: BoundaryCondition,
}

/// Assembles the discrete elliptic operator for diffusivity `D` and potential `d`.
pub fn assemble(
    diffusivity: &Field,
    potential: &Field,
    bc_left: &BoundaryCondition,
    bc_right: &BoundaryCondition,
) -> Result<TridiagonalOperator> {
    diffusivity.check_same_grid(potential)?;
    if diffusivity.min() <= 0.0 {
        return Err(Error::Config("diffusivity must be positive".into()));
    }
    if potential.min() < 0.0 {
        return Err(Error::Config("potential must be non-negative".into()));
    }
    let grid = *diffusivity.grid();
    let n = grid.len();
    let h = grid.h();
    let h2 = h * h;
    let dv = diffusivity.values();
    let pot = potential.values();
    let mid: Vec<f64> = dv.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();

    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    for j in 1..n - 1 {
        let (dm, dp) = (mid[j - 1], mid[j]);
        sub[j] = -dm / h2;
        sup[j] = -dp / h2;
        diag[j] = (dm + dp) / h2 + pot[j];
    }

    let left = match bc_left.robin_coefficient() {
        None => {
            diag[0] = 1.0;
            RowKind::Dirichlet
        }
        Some(beta) => {
            let dm = mid[0];
            diag[0] = 2.0 * dm / h2 + 2.0 * dm * beta / h + pot[0];
            sup[0] = -2.0 * dm / h2;
            RowKind::Flux { weight: 2.0 * dm / h }
        }
    };
    let last = n - 1;
    let right = match bc_right.robin_coefficient() {
        None => {
            sub[last] = 0.0;
            diag[last] = 1.0;
            RowKind::Dirichlet
        }
        Some(beta) => {
            let dm = mid[last - 1];
            diag[last] = 2.0 * dm / h2 + 2.0 * dm * beta / h + pot[last];
            sub[last] = -2.0 * dm / h2;
            RowKind::Flux { weight: 2.0 * dm / h }
        }
    };
    if let RowKind::Dirichlet = left {
        sup[0] = 0.0;
    }

    Ok(TridiagonalOperator {
        grid,
        sub,
        diag,
        sup,
        left,
        right,
        bc_left: bc_left.clone(),
        bc_right: bc_right.clone(),
    })
}

impl TridiagonalOperator {
    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn sub(&self) -> &[f64] {
        &self.sub
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn sup(&self) -> &[f64] {
        &self.sup
    }

    /// Whether row `j` is a Dirichlet (identity) row.
    pub fn is_dirichlet_row(&self, j: usize) -> bool {
        (j == 0 && self.left == RowKind::Dirichlet)
            || (j + 1 == self.grid.len() && self.right == RowKind::Dirichlet)
    }

    fn check_grid(&self, u: &Field) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "operator on {:?}, field on {:?}",
                self.grid,
                u.grid()
            )));
        }
        Ok(())
    }

    pub(crate) fn multiply(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        (0..n)
            .map(|j| {
                let mut acc = self.diag[j] * u[j];
                if j > 0 {
                    acc += self.sub[j] * u[j - 1];
                }
                if j + 1 < n {
                    acc += self.sup[j] * u[j + 1];
                }
                acc
            })
            .collect()
    }

    /// Matrix-vector product. Dirichlet rows return the nodal value.
    pub fn apply(&self, u: &Field) -> Result<Field> {
        self.check_grid(u)?;
        Field::new(self.grid, self.multiply(u.values()))
    }

    /// Right-hand-side contribution of the boundary data at time `t`:
    /// `a(t)` on Dirichlet rows, the flux load on Neumann/impedance rows.
    pub fn boundary_load(&self, t: f64) -> Field {
        let mut load = Field::zeros(self.grid);
        let last = self.grid.len() - 1;
        let v = load.values_mut();
        for (j, kind, bc) in [(0, self.left, &self.bc_left), (last, self.right, &self.bc_right)] {
            v[j] += match kind {
                RowKind::Dirichlet => bc.value_at(t),
                RowKind::Flux { weight } => weight * bc.value_at(t),
            };
        }
        load
    }

    /// `L u` including the inhomogeneous boundary flux at time `t`.
    /// Dirichlet rows hold the boundary defect `u_j - a(t)`.
    pub fn apply_with_data(&self, u: &Field, t: f64) -> Result<Field> {
        self.apply(u)?.sub(&self.boundary_load(t))
    }

    /// Copy with `shift[j]` added to the diagonal of every non-Dirichlet row.
    pub fn shifted(&self, shift: &[f64]) -> Result<Self> {
        if shift.len() != self.grid.len() {
            return Err(Error::GridMismatch("diagonal shift has wrong length".into()));
        }
        let mut out = self.clone();
        for (j, (d, s)) in out.diag.iter_mut().zip(shift).enumerate() {
            if !self.is_dirichlet_row(j) {
                *d += s;
            }
        }
        Ok(out)
    }

    /// Direct solve `op x = rhs` by the Thomas algorithm.
    pub fn solve(&self, rhs: &Field) -> Result<Field> {
        self.check_grid(rhs)?;
        let x = thomas(&self.sub, &self.diag, &self.sup, rhs.values())?;
        Field::new(self.grid, x)
    }
}

/// Thomas algorithm for `sub[j] x[j-1] + diag[j] x[j] + sup[j] x[j+1] = rhs[j]`.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    for j in 0..n {
        let coupling = if j > 0 { sub[j] } else { 0.0 };
        let pivot = diag[j] - if j > 0 { coupling * c[j - 1] } else { 0.0 };
        let size = diag[j].abs().max(sub[j].abs()).max(sup[j].abs());
        if !pivot.is_finite() || pivot.abs() <= 1e-14 * size || size == 0.0 {
            return Err(Error::SingularOperator { row: j });
        }
        c[j] = if j + 1 < n { sup[j] / pivot } else { 0.0 };
        x[j] = (rhs[j] - if j > 0 { coupling * x[j - 1] } else { 0.0 }) / pivot;
    }
    for j in (0..n.saturating_sub(1)).rev() {
        x[j] -= c[j] * x[j + 1];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevOrder {
    L2,
    H1,
    H2,
}

/// Discrete `L2`, `H1` or `H2` norm.
///
/// `L2` uses the trapezoid rule; `H1` adds the squared first differences on
/// each cell; `H2` also adds squared second differences (trapezoid rule,
/// one-sided three-point stencils at the endpoints).
pub fn sobolev_norm(u: &Field, order: SobolevOrder) -> f64 {
    let h = u.grid().h();
    let v = u.values();
    let n = v.len();
    let trapezoid = |w: &[f64]| -> f64 {
        let m = w.len();
        let inner: f64 = w.iter().map(|x| x * x).sum();
        h * (inner - 0.5 * (w[0] * w[0] + w[m - 1] * w[m - 1]))
    };
    let mut sq = trapezoid(v);
    if order == SobolevOrder::L2 {
        return sq.sqrt();
    }
    sq += v.windows(2).map(|w| ((w[1] - w[0]) / h).powi(2) * h).sum::<f64>();
    if order == SobolevOrder::H2 && n >= 3 {
        let h2 = h * h;
        let mut second = vec![0.0; n];
        for j in 1..n - 1 {
            second[j] = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / h2;
        }
        second[0] = (v[0] - 2.0 * v[1] + v[2]) / h2;
        second[n - 1] = (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / h2;
        sq += trapezoid(&second);
    }
    sq.sqrt()
}
