//! Radius of analyticity: a spectral-decay estimate σ̂, closed-form lower and
//! upper bounds on σ(t), and a tracker integrating the σ shrinkage law along a
//! run.

mod tracker;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::Spectrum;

pub use tracker::{
    annotate_bounds, calibrate, track_sigma, Calibration, SigmaSample, SigmaTracker, TrackerOptions,
};

/// Fewest modes a decay fit is attempted on.
pub const MIN_FIT_POINTS: usize = 8;

/// Relative floor below which coefficients count as rounding noise: two
/// decades above machine epsilon.
pub const MACHINE_NOISE_FLOOR: f64 = 100.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusFit {
    /// `None` when too few modes qualify; see `reason`.
    pub sigma_hat: Option<f64>,
    pub intercept: f64,
    pub r_squared: f64,
    /// Range of |ξ| covered by the modes used.
    pub band: (f64, f64),
    pub n_points: usize,
    pub reason: Option<String>,
}

impl RadiusFit {
    fn undefined(n_points: usize, reason: String) -> Self {
        Self {
            sigma_hat: None,
            intercept: f64::NAN,
            r_squared: 0.0,
            band: (f64::NAN, f64::NAN),
            n_points,
            reason: Some(reason),
        }
    }
}

/// Weighted least-squares fit of `log|c_k| ≈ a − σ̂|ξ_k|`.
///
/// Uses modes with |k| ≥ 2 (the unpaired Nyquist mode excluded) whose modulus
/// exceeds `max(noise_floor, MACHINE_NOISE_FLOOR) · max|c|`. Each point is
/// weighted by its height above that threshold in log scale, so modes near the
/// noise contribute little.
pub fn estimate_radius(u: &Spectrum, noise_floor: f64) -> RadiusFit {
    let max = u.max_abs();
    if max == 0.0 || !max.is_finite() {
        return RadiusFit::undefined(0, "spectrum is zero".into());
    }
    let thresh = noise_floor.max(MACHINE_NOISE_FLOOR) * max;
    let nyq = -(u.grid().n_modes() as i64) / 2;
    let pts: Vec<(f64, f64, f64)> = u
        .modes()
        .filter(|&(k, _, c)| k.abs() >= 2 && k != nyq && c.norm() > thresh)
        .map(|(_, xi, c)| {
            let a = c.norm();
            (xi.abs(), a.ln(), (a / thresh).ln())
        })
        .collect();
    let n = pts.len();
    if n < MIN_FIT_POINTS {
        return RadiusFit::undefined(
            n,
            format!("{n} modes above the noise floor, need {MIN_FIT_POINTS}"),
        );
    }

    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| p.2 * (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return RadiusFit::undefined(n, "all fitted modes share one wavenumber".into());
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| p.2 * (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if syy <= f64::MIN_POSITIVE {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(0.0, f64::max);
    RadiusFit {
        sigma_hat: Some((-slope).max(0.0)),
        intercept,
        r_squared,
        band: (lo, hi),
        n_points: n,
        reason: None,
    }
}

/// Constants entering the closed-form radius bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// σ(0)
    pub sigma0: f64,
    /// 𝒳₀ = ‖η₀‖_{G^{σ₀,2}}
    pub x0: f64,
    /// 𝒴₀ = C(‖η₀‖_{H²}^{3/2} + ‖η₀‖_{H²}²)
    pub y0: f64,
    /// ‖J²η₀‖²
    pub h2sq: f64,
    /// Constant in front of the upper bound.
    pub c_upper: f64,
}

impl BoundInputs {
    pub fn new(sigma0: f64, x0: f64, y0: f64, h2sq: f64, c_upper: f64) -> Result<Self> {
        let b = Self {
            sigma0,
            x0,
            y0,
            h2sq,
            c_upper,
        };
        let ok = [x0, y0, h2sq].iter().all(|v| v.is_finite() && *v >= 0.0)
            && sigma0.is_finite()
            && sigma0 > 0.0
            && c_upper.is_finite()
            && c_upper > 0.0;
        if !ok {
            return Err(Error::invalid(format!("invalid bound inputs {b:?}")));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundVariant {
    /// σ₀ exp{−(𝒳₀+2𝒳₀²)t − (2/3)t^{3/2}𝒴₀ − t²𝒴₀²}, the exact antiderivative
    /// of A(t) = 𝒳₀ + t^{1/2}𝒴₀ + 2𝒳₀² + 2t𝒴₀².
    #[default]
    ExactIntegral,
    /// Same with coefficient 3/2 on the t^{3/2} term.
    Printed,
}

/// A(t) = 𝒳₀ + t^{1/2}𝒴₀ + 2𝒳₀² + 2t𝒴₀², the rate bounding −σ′/σ.
pub fn shrink_rate_bound(t: f64, b: &BoundInputs) -> f64 {
    b.x0 + t.sqrt() * b.y0 + 2.0 * b.x0 * b.x0 + 2.0 * t * b.y0 * b.y0
}

pub fn lower_bound_radius(t: f64, b: &BoundInputs, variant: LowerBoundVariant) -> f64 {
    debug_assert!(t >= 0.0);
    let c = match variant {
        LowerBoundVariant::ExactIntegral => 2.0 / 3.0,
        LowerBoundVariant::Printed => 1.5,
    };
    let exponent = (b.x0 + 2.0 * b.x0 * b.x0) * t + c * t.powf(1.5) * b.y0 + t * t * b.y0 * b.y0;
    b.sigma0 * (-exponent).exp()
}

pub fn upper_bound_radius(t: f64, b: &BoundInputs) -> f64 {
    debug_assert!(t >= 0.0);
    b.c_upper * b.sigma0 * (-b.h2sq * t).exp()
}
