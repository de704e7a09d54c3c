use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{SpectralGrid, Spectrum};
use crate::params::CoefficientSet;

/// Fourier multipliers of the model, written as functions of ξ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolKind {
    /// 1 + γ₁ξ² + δ₁ξ⁴
    Varphi,
    /// ξ(1 − γ₂ξ² + δ₂ξ⁴) / varphi
    Phi,
    /// ξ / varphi
    Psi,
    /// (3ξ − 4γξ³) / (4 varphi)
    Tau,
    /// |ξ| / (1 + ξ²)
    Omega,
    /// (1 − γ₂ξ² + δ₂ξ⁴) / varphi, so that iφ(∂x) = ∂x 𝒦
    Kappa,
}

pub fn evaluate_symbol(kind: SymbolKind, xi: f64, c: &CoefficientSet) -> f64 {
    let xi2 = xi * xi;
    let varphi = 1.0 + c.gamma1 * xi2 + c.delta1 * xi2 * xi2;
    match kind {
        SymbolKind::Varphi => varphi,
        SymbolKind::Phi => xi * (1.0 - c.gamma2 * xi2 + c.delta2 * xi2 * xi2) / varphi,
        SymbolKind::Psi => xi / varphi,
        SymbolKind::Tau => (3.0 * xi - 4.0 * c.gamma * xi * xi2) / (4.0 * varphi),
        SymbolKind::Omega => xi.abs() / (1.0 + xi2),
        SymbolKind::Kappa => (1.0 - c.gamma2 * xi2 + c.delta2 * xi2 * xi2) / varphi,
    }
}

/// `c_k ↦ m(ξ_k) c_k`. The unpaired mode k = −n/2 is zeroed.
pub fn apply_multiplier(kind: SymbolKind, s: &Spectrum, c: &CoefficientSet) -> Spectrum {
    let mut out = s.map_modes(|xi, z| z * evaluate_symbol(kind, xi, c));
    out.zero_nyquist();
    out
}

/// `c_k ↦ iξ_k c_k`, with the unpaired mode zeroed.
pub fn spatial_derivative(s: &Spectrum) -> Spectrum {
    let mut out = s.map_modes(|xi, z| z * Complex64::new(0.0, xi));
    out.zero_nyquist();
    out
}

/// Largest ratios behind the pointwise symbol bounds used by the multilinear
/// estimates, measured over the nonzero grid wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationConstants {
    /// max |τ(ξ)| / ω(ξ)
    pub tau_by_omega: f64,
    /// max |ψ(ξ)| (1+|ξ|) / ω(ξ)
    pub psi_by_omega_bracket: f64,
    /// max (1+|ξ|)^s |ψ(ξ)| / (1+|ξ|)^{s−3}
    pub psi_decay: f64,
}

pub fn symbol_domination_constants(
    grid: &SpectralGrid,
    c: &CoefficientSet,
    s: f64,
) -> DominationConstants {
    let mut out = DominationConstants {
        tau_by_omega: 0.0,
        psi_by_omega_bracket: 0.0,
        psi_decay: 0.0,
    };
    for xi in grid.wavenumbers() {
        if xi == 0.0 {
            continue;
        }
        let omega = evaluate_symbol(SymbolKind::Omega, xi, c);
        let tau = evaluate_symbol(SymbolKind::Tau, xi, c).abs();
        let psi = evaluate_symbol(SymbolKind::Psi, xi, c).abs();
        let bracket = 1.0 + xi.abs();
        out.tau_by_omega = out.tau_by_omega.max(tau / omega);
        out.psi_by_omega_bracket = out.psi_by_omega_bracket.max(psi * bracket / omega);
        out.psi_decay = out
            .psi_decay
            .max(bracket.powf(s) * psi / bracket.powf(s - 3.0));
    }
    out
}
