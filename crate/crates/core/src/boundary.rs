//! Endpoint boundary conditions `B u = a(t)`.

use std::fmt;
use std::sync::Arc;

/// Type of the condition imposed at one endpoint. Fluxes use the outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// `u = a`
    Dirichlet,
    /// `du/dn = a`
    Neumann,
    /// `du/dn + beta u = a`
    Impedance { beta: f64 },
}

/// Time-dependent boundary data `a(t)`.
#[derive(Clone)]
pub enum BoundaryData {
    /// `offset + slope * t`
    Affine { offset: f64, slope: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl BoundaryData {
    pub fn constant(value: f64) -> Self {
        BoundaryData::Affine {
            offset: value,
            slope: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Affine { offset, slope } => offset + slope * t,
            BoundaryData::Custom(a) => a(t),
        }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Affine { offset, slope } => f
                .debug_struct("Affine")
                .field("offset", offset)
                .field("slope", slope)
                .finish(),
            BoundaryData::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub kind: BoundaryKind,
    pub data: BoundaryData,
}

impl BoundaryCondition {
    pub fn dirichlet(value: f64) -> Self {
        Self {
            kind: BoundaryKind::Dirichlet,
            data: BoundaryData::constant(value),
        }
    }

    pub fn neumann(flux: f64) -> Self {
        Self {
            kind: BoundaryKind::Neumann,
            data: BoundaryData::constant(flux),
        }
    }

    pub fn impedance(beta: f64, value: f64) -> Self {
        Self {
            kind: BoundaryKind::Impedance { beta },
            data: BoundaryData::constant(value),
        }
    }

    pub fn with_data(mut self, data: BoundaryData) -> Self {
        self.data = data;
        self
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self.kind, BoundaryKind::Dirichlet)
    }

    /// `beta` in `du/dn + beta u = a`; `None` for Dirichlet.
    pub fn robin_coefficient(&self) -> Option<f64> {
        match self.kind {
            BoundaryKind::Dirichlet => None,
            BoundaryKind::Neumann => Some(0.0),
            BoundaryKind::Impedance { beta } => Some(beta),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.data.eval(t)
    }
}
