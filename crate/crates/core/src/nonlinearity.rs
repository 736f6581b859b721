//! Reaction nonlinearities `f` with `f(0) = f'(0) = 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `coeff * u^exponent`, exponent >= 2.
    Power { coeff: f64, exponent: i32 },
    Custom { f: ScalarFn, df: ScalarFn, d2f: ScalarFn },
}

/// The reaction term `f` together with its first two derivatives.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    kind: Kind,
    growth_exponent: Option<f64>,
}

impl Nonlinearity {
    /// `coeff * u^exponent`. Exponents below 2 would violate `f'(0) = 0`.
    pub fn power(name: impl Into<String>, coeff: f64, exponent: i32) -> Result<Self> {
        if exponent < 2 {
            return Err(Error::Config(format!(
                "power nonlinearity needs exponent >= 2, got {exponent}"
            )));
        }
        Ok(Self {
            name: name.into(),
            kind: Kind::Power { coeff, exponent },
            growth_exponent: Some(exponent as f64),
        })
    }

    /// A user supplied `(f, f', f'')` triple; the normalization at zero is checked.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let name = name.into();
        if f(0.0).abs() > 1e-14 || df(0.0).abs() > 1e-14 {
            return Err(Error::Config(format!(
                "nonlinearity {name} must satisfy f(0) = f'(0) = 0"
            )));
        }
        Ok(Self {
            name,
            kind: Kind::Custom {
                f: Arc::new(f),
                df: Arc::new(df),
                d2f: Arc::new(d2f),
            },
            growth_exponent: None,
        })
    }

    /// The four reaction terms used in the reconstruction experiments:
    /// `f1 = u^2`, `f2 = u^3 / 4`, `f3 = 4 u^2`, `f4 = u^3`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "f1" => Self::power("f1", 1.0, 2),
            "f2" => Self::power("f2", 0.25, 3),
            "f3" => Self::power("f3", 4.0, 2),
            "f4" => Self::power("f4", 1.0, 3),
            other => Err(Error::Config(format!(
                "unknown nonlinearity {other:?} (expected f1, f2, f3 or f4)"
            ))),
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 4] = ["f1", "f2", "f3", "f4"];

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Growth exponent of `f` at infinity, when known. Informational only.
    pub fn growth_exponent(&self) -> Option<f64> {
        self.growth_exponent
    }

    pub fn value(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Power { coeff, exponent } => coeff * u.powi(*exponent),
            Kind::Custom { f, .. } => f(u),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Power { coeff, exponent } => coeff * *exponent as f64 * u.powi(exponent - 1),
            Kind::Custom { df, .. } => df(u),
        }
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Power { coeff, exponent } => {
                coeff * (*exponent * (exponent - 1)) as f64 * u.powi(exponent - 2)
            }
            Kind::Custom { d2f, .. } => d2f(u),
        }
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("growth_exponent", &self.growth_exponent)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let f1 = Nonlinearity::builtin("f1").unwrap();
        assert_eq!((f1.value(2.0), f1.derivative(2.0), f1.second_derivative(2.0)), (4.0, 4.0, 2.0));
        let f2 = Nonlinearity::builtin("f2").unwrap();
        assert_eq!((f2.value(2.0), f2.derivative(2.0), f2.second_derivative(2.0)), (2.0, 3.0, 3.0));
        let f4 = Nonlinearity::builtin("f4").unwrap();
        assert_eq!((f4.value(2.0), f4.derivative(2.0), f4.second_derivative(2.0)), (8.0, 12.0, 12.0));
        for name in Nonlinearity::BUILTIN_NAMES {
            let f = Nonlinearity::builtin(name).unwrap();
            assert!(f.value(0.0).abs() <= 1e-14);
            assert!(f.derivative(0.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn unknown_builtin_is_config_error() {
        assert!(matches!(Nonlinearity::builtin("f5"), Err(Error::Config(_))));
    }

    #[test]
    fn custom_must_be_normalized() {
        assert!(Nonlinearity::custom("shifted", |u| u * u + 1.0, |u| 2.0 * u, |_| 2.0).is_err());
        assert!(Nonlinearity::custom("linear", |u| u, |_| 1.0, |_| 0.0).is_err());
        assert!(Nonlinearity::custom("sinh", |u: f64| u.sinh() - u, |u: f64| u.cosh() - 1.0, f64::sinh).is_ok());
        assert!(Nonlinearity::power("bad", 1.0, 1).is_err());
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
    }

    #[test]
    fn derivatives_match_central_differences() {
        let eps = 1e-5;
        for name in Nonlinearity::BUILTIN_NAMES {
            let f = Nonlinearity::builtin(name).unwrap();
            for i in 0..=100 {
                let u = -2.0 + 4.0 * i as f64 / 100.0;
                let df = (f.value(u + eps) - f.value(u - eps)) / (2.0 * eps);
                let d2f = (f.derivative(u + eps) - f.derivative(u - eps)) / (2.0 * eps);
                assert!(rel_close(f.derivative(u), df, 1e-6), "{name} f' at {u}");
                assert!(rel_close(f.second_derivative(u), d2f, 1e-6), "{name} f'' at {u}");
            }
        }
    }
}
