use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{gevrey_norm, sobolev_norm, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::{apply_multiplier, transform_inverse, Spectrum, SymbolKind};

/// `‖J^{s,σ}u‖ / (‖J^{s₁,σ}u‖^θ ‖J^{s₂,σ}u‖^{1−θ})` with s = θs₁ + (1−θ)s₂.
/// Hölder's inequality makes this at most 1.
pub fn interpolation_check(u: &Spectrum, s1: f64, s2: f64, theta: f64, sigma: f64) -> Result<f64> {
    if !(s1 <= s2) || !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!(
            "interpolation needs s1 <= s2 and theta in [0, 1], got ({s1}, {s2}, {theta})"
        )));
    }
    if u.is_zero() {
        return Err(Error::invalid("interpolation needs a nonzero field"));
    }
    let s = theta * s1 + (1.0 - theta) * s2;
    let lhs = gevrey_norm(u, GevreyIndex::new(sigma, s)?)?;
    let a = gevrey_norm(u, GevreyIndex::new(sigma, s1)?)?;
    let b = gevrey_norm(u, GevreyIndex::new(sigma, s2)?)?;
    Ok(lhs / (a.powf(theta) * b.powf(1.0 - theta)))
}

/// c₁ values at which the smallest admissible c₂ is reported.
pub const SPLITTING_C1_GRID: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

/// Terms of `‖J^{s,σ}u‖ ≤ c₁‖J^s u‖ + c₂σ^r‖J^{s+r,σ}u‖`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub lhs: f64,
    /// ‖J^s u‖
    pub sobolev_term: f64,
    /// σ^r ‖J^{s+r,σ}u‖
    pub gevrey_term: f64,
    /// `lhs / (sobolev_term + gevrey_term)`, the ratio at c₁ = c₂ = 1.
    pub unit_ratio: f64,
    /// Smallest c₂ for each c₁ of [`SPLITTING_C1_GRID`]; `None` when no c₂
    /// works (σ = 0 with c₁ too small cannot happen, since then lhs equals
    /// the Sobolev term).
    pub required_c2: Vec<(f64, Option<f64>)>,
}

impl SplittingReport {
    /// The inequality with c₁ = c₂ = 1, up to a relative slack.
    pub fn holds_with_unit_constants(&self, slack: f64) -> bool {
        self.lhs <= (self.sobolev_term + self.gevrey_term) * (1.0 + slack)
    }
}

pub fn splitting_check(u: &Spectrum, s: f64, r: f64, sigma: f64) -> Result<SplittingReport> {
    if !(r >= 0.0) || !(sigma >= 0.0) {
        return Err(Error::invalid(format!(
            "splitting needs r >= 0 and sigma >= 0, got r = {r}, sigma = {sigma}"
        )));
    }
    let lhs = gevrey_norm(u, GevreyIndex::new(sigma, s)?)?;
    let sobolev_term = sobolev_norm(u, s);
    let gevrey_term = if sigma == 0.0 {
        0.0
    } else {
        sigma.powf(r) * gevrey_norm(u, GevreyIndex::new(sigma, s + r)?)?
    };
    let total = sobolev_term + gevrey_term;
    let unit_ratio = if total == 0.0 { 0.0 } else { lhs / total };
    let required_c2 = SPLITTING_C1_GRID
        .iter()
        .map(|&c1| {
            let gap = lhs - c1 * sobolev_term;
            let c2 = if gap <= 0.0 {
                Some(0.0)
            } else if gevrey_term > 0.0 {
                Some(gap / gevrey_term)
            } else {
                None
            };
            (c1, c2)
        })
        .collect();
    Ok(SplittingReport {
        lhs,
        sobolev_term,
        gevrey_term,
        unit_ratio,
        required_c2,
    })
}

/// `|⟨v, iφ(∂x)v⟩| / (‖v‖² + ε)`, the inner product taken on physical samples.
/// Vanishes because iφ(∂x) is skew-adjoint.
pub fn antisymmetry_check(v: &Spectrum, coeffs: &CoefficientSet) -> Result<f64> {
    let phi_v = apply_multiplier(SymbolKind::Phi, v, coeffs);
    let i_phi_v = phi_v.map_modes(|_, z| z * num_complex::Complex64::new(0.0, 1.0));
    let mut vv = v.clone();
    vv.zero_nyquist();
    let a = transform_inverse(&vv)?;
    let b = transform_inverse(&i_phi_v)?;
    let inner = a.inner(&b)?;
    Ok(inner.abs() / (a.l2_norm_sq() + f64::MIN_POSITIVE))
}
