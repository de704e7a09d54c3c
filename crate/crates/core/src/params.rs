//! Model coefficients of the fifth-order KdV-BBM equation
//!
//! ```text
//! η_t + η_x − γ₁η_xxt + γ₂η_xxx + δ₁η_xxxxt + δ₂η_xxxxx
//!     + (3/2)ηη_x + γ(η²)_xxx − (7/48)(η_x²)_x − (1/8)(η³)_x = 0
//! ```
//!
//! The coefficients either come straight from a [`CoefficientSet`] or are
//! derived from the parameters of the underlying two-way `abcd` family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for every algebraic constraint on the coefficients.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Value of γ for which the flow conserves the energy functional.
pub const HAMILTONIAN_GAMMA: f64 = 7.0 / 48.0;

/// Parameters of the `abcd` family the model is derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcdParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    /// ρ = b + d − 1/6; filled in by [`AbcdParams::new`] when omitted.
    #[serde(default)]
    pub rho: Option<f64>,
}

impl AbcdParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(a: f64, b: f64, c: f64, d: f64, a1: f64, b1: f64, c1: f64, d1: f64) -> Self {
        Self {
            a,
            b,
            c,
            d,
            a1,
            b1,
            c1,
            d1,
            rho: Some(b + d - 1.0 / 6.0),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho.unwrap_or(self.b + self.d - 1.0 / 6.0)
    }

    fn check(&self) -> Result<()> {
        let sum = self.a + self.b + self.c + self.d;
        let all = [
            self.a,
            self.b,
            self.c,
            self.d,
            self.a1,
            self.b1,
            self.c1,
            self.d1,
            self.rho(),
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "abcd parameters".into(),
            });
        }
        let r = (sum - 1.0 / 3.0).abs();
        if r > CONSTRAINT_TOL {
            return Err(Error::ConstraintViolation {
                name: "a + b + c + d = 1/3".into(),
                residual: r,
            });
        }
        let r = (self.rho() - (self.b + self.d - 1.0 / 6.0)).abs();
        if r > CONSTRAINT_TOL {
            return Err(Error::ConstraintViolation {
                name: "rho = b + d - 1/6".into(),
                residual: r,
            });
        }
        Ok(())
    }
}

/// The constants γ₁, γ₂, δ₁, δ₂, γ plus the extremes of {γ₁, δ₁}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet {
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub gamma: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for CoefficientSet {
    /// γ₁ = γ₂ = 1/12, γ = 7/48, δ₁ = 1/20, δ₂ = 4/45.
    fn default() -> Self {
        Self::from_parts(1.0 / 12.0, 1.0 / 12.0, 1.0 / 20.0, 4.0 / 45.0, 7.0 / 48.0)
    }
}

impl CoefficientSet {
    /// Builds a set without validating it; see [`CoefficientSet::new`].
    pub fn from_parts(gamma1: f64, gamma2: f64, delta1: f64, delta2: f64, gamma: f64) -> Self {
        Self {
            gamma1,
            gamma2,
            delta1,
            delta2,
            gamma,
            c_min: gamma1.min(delta1),
            c_max: gamma1.max(delta1),
        }
    }

    /// Builds and validates a set, failing on the first violated invariant.
    pub fn new(gamma1: f64, gamma2: f64, delta1: f64, delta2: f64, gamma: f64) -> Result<Self> {
        let set = Self::from_parts(gamma1, gamma2, delta1, delta2, gamma);
        set.validate().into_result()?;
        Ok(set)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_coefficients(self)
    }

    pub fn is_hamiltonian(&self) -> bool {
        (self.gamma - HAMILTONIAN_GAMMA).abs() <= CONSTRAINT_TOL
    }
}

/// Derives the model coefficients from `abcd` parameters.
pub fn derive_coefficients(p: &AbcdParams) -> Result<CoefficientSet> {
    p.check()?;
    let AbcdParams {
        a,
        b,
        c,
        d,
        a1,
        b1,
        c1,
        d1,
        ..
    } = *p;
    let rho = p.rho();
    let gamma1 = 0.5 * (b + d - rho);
    let gamma2 = 0.5 * (a + c + rho);
    let delta1 = 0.25 * (2.0 * (b1 + d1) - (b - d + rho) * (1.0 / 6.0 - a - d) - d * (c - a + rho));
    let delta2 = 0.25 * (2.0 * (a1 + c1) - (c - a + rho) * (1.0 / 6.0 - a) + rho / 3.0);
    let gamma = (5.0 - 9.0 * (b + d) + 9.0 * rho) / 24.0;
    let set = CoefficientSet::from_parts(gamma1, gamma2, delta1, delta2, gamma);
    set.validate().into_result()?;
    Ok(set)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<()> {
        match self.failures().next() {
            None => Ok(()),
            Some(f) => Err(Error::ConstraintViolation {
                name: f.name.to_string(),
                residual: f.residual,
            }),
        }
    }
}

/// Checks every invariant of a coefficient set and reports each residual.
pub fn validate_coefficients(c: &CoefficientSet) -> ValidationReport {
    let tol = |name, residual: f64| CheckOutcome {
        name,
        passed: residual.is_finite() && residual <= CONSTRAINT_TOL,
        residual,
    };
    // Positivity residual is the amount by which the value falls short of 0.
    let positive = |name, v: f64| CheckOutcome {
        name,
        passed: v.is_finite() && v > 0.0,
        residual: if v > 0.0 { 0.0 } else { -v },
    };
    let checks = vec![
        positive("gamma1 > 0", c.gamma1),
        positive("delta1 > 0", c.delta1),
        tol(
            "gamma1 + gamma2 = 1/6",
            (c.gamma1 + c.gamma2 - 1.0 / 6.0).abs(),
        ),
        tol(
            "gamma = (5 - 18 gamma1)/24",
            (c.gamma - (5.0 - 18.0 * c.gamma1) / 24.0).abs(),
        ),
        tol(
            "delta2 - delta1 = 19/360 - gamma1/6",
            (c.delta2 - c.delta1 - (19.0 / 360.0 - c.gamma1 / 6.0)).abs(),
        ),
        tol(
            "c_min = min(gamma1, delta1)",
            (c.c_min - c.gamma1.min(c.delta1)).abs(),
        ),
        tol(
            "c_max = max(gamma1, delta1)",
            (c.c_max - c.gamma1.max(c.delta1)).abs(),
        ),
    ];
    ValidationReport { checks }
}
