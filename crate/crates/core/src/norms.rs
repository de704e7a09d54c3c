//! Sobolev and Gevrey norms and the conserved energy, all evaluated on the
//! spectrum with ⟨ξ⟩ = 1 + |ξ|.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::CoefficientSet;
use crate::spectral::{SpectralGrid, Spectrum};

/// Largest admissible exponent 2σ⟨ξ_max⟩ of a Gevrey weight.
pub const MAX_GEVREY_EXPONENT: f64 = 650.0;

/// Selects the G^{σ,s} topology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevreyIndex {
    pub sigma: f64,
    pub s: f64,
}

impl GevreyIndex {
    pub fn new(sigma: f64, s: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "Gevrey index needs finite sigma >= 0 and finite s, got ({sigma}, {s})"
            )));
        }
        Ok(Self { sigma, s })
    }
}

#[inline]
pub fn bracket(xi: f64) -> f64 {
    1.0 + xi.abs()
}

/// `sqrt(2L Σ_k w(ξ_k) |c_k|²)`.
pub fn weighted_norm(u: &Spectrum, weight: impl Fn(f64) -> f64) -> f64 {
    let sum: f64 = u.modes().map(|(_, xi, c)| weight(xi) * c.norm_sqr()).sum();
    (2.0 * u.grid().half_length() * sum).sqrt()
}

pub fn sobolev_norm(u: &Spectrum, s: f64) -> f64 {
    if s == 0.0 {
        return weighted_norm(u, |_| 1.0);
    }
    weighted_norm(u, |xi| bracket(xi).powf(2.0 * s))
}

/// Errors when the largest weight exponent would leave the safe range.
pub fn check_gevrey_range(grid: &SpectralGrid, sigma: f64) -> Result<()> {
    let exponent = 2.0 * sigma * bracket(grid.xi_max());
    if exponent > MAX_GEVREY_EXPONENT || !exponent.is_finite() {
        return Err(Error::Overflow {
            exponent,
            limit: MAX_GEVREY_EXPONENT,
        });
    }
    Ok(())
}

pub fn gevrey_norm(u: &Spectrum, g: GevreyIndex) -> Result<f64> {
    if g.sigma == 0.0 {
        return Ok(sobolev_norm(u, g.s));
    }
    check_gevrey_range(u.grid(), g.sigma)?;
    Ok(weighted_norm(u, |xi| {
        let b = bracket(xi);
        b.powf(2.0 * g.s) * (2.0 * g.sigma * b).exp()
    }))
}

/// E = ∫ η² + γ₁η_x² + δ₁η_xx², whose spectral weight is exactly varphi(ξ).
pub fn energy(u: &Spectrum, c: &CoefficientSet) -> f64 {
    weighted_norm(u, |xi| {
        let x2 = xi * xi;
        1.0 + c.gamma1 * x2 + c.delta1 * x2 * x2
    })
    .powi(2)
}

/// Squared H² norm with the polynomial weight 1 + ξ² + ξ⁴.
pub fn h2_poly_norm_sq(u: &Spectrum) -> f64 {
    weighted_norm(u, |xi| {
        let x2 = xi * xi;
        1.0 + x2 + x2 * x2
    })
    .powi(2)
}

/// Admissible range [c_min/c_max, c_max/c_min] for ‖η(t)‖²_{H²} / ‖η₀‖²_{H²}
/// along a Hamiltonian trajectory.
pub fn h2_ratio_window(c: &CoefficientSet) -> (f64, f64) {
    (c.c_min / c.c_max, c.c_max / c.c_min)
}

/// Extremes over the grid of the pointwise ratio between the varphi weight
/// and the polynomial weight, i.e. the sharp constants in
/// `lo·‖η‖²_{H²,poly} ≤ E(η) ≤ hi·‖η‖²_{H²,poly}` on this grid.
pub fn energy_h2_equivalence(grid: &SpectralGrid, c: &CoefficientSet) -> (f64, f64) {
    extremes(grid, |xi| {
        let x2 = xi * xi;
        (1.0 + c.gamma1 * x2 + c.delta1 * x2 * x2) / (1.0 + x2 + x2 * x2)
    })
}

/// Extremes over the grid of ⟨ξ⟩⁴ / (1 + ξ² + ξ⁴), relating the bracket H²
/// norm to the polynomial one.
pub fn bracket_h2_equivalence(grid: &SpectralGrid) -> (f64, f64) {
    extremes(grid, |xi| {
        let x2 = xi * xi;
        bracket(xi).powi(4) / (1.0 + x2 + x2 * x2)
    })
}

fn extremes(grid: &SpectralGrid, f: impl Fn(f64) -> f64) -> (f64, f64) {
    grid.wavenumbers()
        .into_iter()
        .map(f)
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}
