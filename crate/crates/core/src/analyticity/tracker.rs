use serde::{Deserialize, Serialize};

use super::{
    estimate_radius, lower_bound_radius, upper_bound_radius, BoundInputs, LowerBoundVariant,
};
use crate::dynamics::{evolve_ifrk4, MarchOptions, Observer, SampleRecord, Trajectory};
use crate::error::{Error, Result};
use crate::norms::{check_gevrey_range, gevrey_norm, sobolev_norm, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::{SpectralGrid, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerOptions {
    pub sigma0: f64,
    /// Sobolev index of the Gevrey norm driving the shrinkage.
    pub s: f64,
    /// Largest relative change of σ allowed in one Euler sub-step.
    pub max_rel_change: f64,
    /// Relative noise floor passed to the decay fit for σ̂.
    pub noise_floor: f64,
}

impl Default for TrackerOptions {
    fn default() -> Self {
        Self {
            sigma0: 0.5,
            s: 2.0,
            max_rel_change: 0.01,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaSample {
    pub t: f64,
    pub sigma: f64,
    /// ‖η(t)‖_{G^{σ(t),s}}
    pub gevrey: f64,
}

/// Integrates `σ′ = −σ(G + G²)`, `G = ‖η(t)‖_{G^{σ(t),s}}`, alongside a run.
///
/// Each PDE step uses the state at its left end; the step is split into equal
/// exponential Euler sub-steps `σ ← σ e^{−h(G+G²)}` so that σ moves by at most
/// `max_rel_change` per sub-step.
#[derive(Debug, Clone)]
pub struct SigmaTracker {
    opts: TrackerOptions,
    sigma: f64,
    collapse_below: f64,
    series: Vec<SigmaSample>,
}

impl SigmaTracker {
    pub fn new(grid: &SpectralGrid, opts: TrackerOptions) -> Result<Self> {
        if !(opts.sigma0 > 0.0 && opts.sigma0.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma0 must be positive, got {}",
                opts.sigma0
            )));
        }
        if !(opts.max_rel_change > 0.0 && opts.max_rel_change < 1.0) {
            return Err(Error::invalid(format!(
                "max_rel_change must lie in (0, 1), got {}",
                opts.max_rel_change
            )));
        }
        check_gevrey_range(grid, opts.sigma0)?;
        Ok(Self {
            opts,
            sigma: opts.sigma0,
            collapse_below: collapse_threshold(grid),
            series: Vec::new(),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn series(&self) -> &[SigmaSample] {
        &self.series
    }

    pub fn into_series(self) -> Vec<SigmaSample> {
        self.series
    }

    fn index(&self) -> GevreyIndex {
        GevreyIndex {
            sigma: self.sigma,
            s: self.opts.s,
        }
    }
}

/// Smallest σ the grid can resolve, π / (L · n/2).
pub fn collapse_threshold(grid: &SpectralGrid) -> f64 {
    std::f64::consts::PI / (grid.half_length() * (grid.n_modes() / 2) as f64)
}

impl Observer for SigmaTracker {
    fn on_step(&mut self, t0: f64, u0: &Spectrum, t1: f64, u1: &Spectrum) -> Result<()> {
        if self.series.is_empty() {
            self.series.push(SigmaSample {
                t: t0,
                sigma: self.sigma,
                gevrey: gevrey_norm(u0, self.index())?,
            });
        }
        let h = t1 - t0;
        let g = gevrey_norm(u0, self.index())?;
        let rate = g + g * g;
        if rate > 0.0 {
            // The rate only decreases as σ shrinks, so the first one sets the
            // sub-step count.
            let m = (h * rate / self.opts.max_rel_change).ceil().max(1.0) as usize;
            let dh = h / m as f64;
            for j in 0..m {
                let g = if j == 0 {
                    g
                } else {
                    gevrey_norm(u0, self.index())?
                };
                self.sigma *= (-dh * (g + g * g)).exp();
            }
        }
        if !(self.sigma >= self.collapse_below) {
            return Err(Error::StepCollapse {
                t: t1,
                sigma: self.sigma,
                threshold: self.collapse_below,
            });
        }
        self.series.push(SigmaSample {
            t: t1,
            sigma: self.sigma,
            gevrey: gevrey_norm(u1, self.index())?,
        });
        Ok(())
    }

    fn annotate(&self, record: &mut SampleRecord) -> Result<()> {
        record.sigma = Some(self.sigma);
        record.gevrey = gevrey_norm(&record.state, self.index())?;
        record.sigma_hat = estimate_radius(&record.state, self.opts.noise_floor).sigma_hat;
        Ok(())
    }
}

/// Runs the marcher with a [`SigmaTracker`] attached. Records carry σ(t), σ̂
/// and the Gevrey norm at σ(t).
pub fn track_sigma(
    eta0: &Spectrum,
    coeffs: &CoefficientSet,
    march: &MarchOptions,
    opts: &TrackerOptions,
) -> Result<(Trajectory, Vec<SigmaSample>)> {
    let mut tracker = SigmaTracker::new(eta0.grid(), *opts)?;
    let mut march = *march;
    march.gevrey = GevreyIndex {
        sigma: opts.sigma0,
        s: opts.s,
    };
    let traj = evolve_ifrk4(eta0, coeffs, &march, &mut tracker)?;
    let mut series = tracker.into_series();
    if series.is_empty() {
        series.push(SigmaSample {
            t: 0.0,
            sigma: opts.sigma0,
            gevrey: traj.records[0].gevrey,
        });
    }
    Ok((traj, series))
}

/// Empirical constants of the radius bounds, fitted on the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub bounds: BoundInputs,
    /// C in 𝒴₀ = C(‖η₀‖_{H²}^{3/2} + ‖η₀‖_{H²}²).
    pub growth_constant: f64,
    /// End of the fitting window.
    pub window_end: f64,
    /// sup over the whole run of (G(t) − 𝒳₀)₊ / t^{1/2}.
    pub growth_ratio_max: f64,
}

impl Calibration {
    /// Samples violating G(t) ≤ 𝒳₀ + t^{1/2}𝒴₀ by more than `rel_slack`.
    pub fn growth_violations(&self, series: &[SigmaSample], rel_slack: f64) -> usize {
        let b = &self.bounds;
        series
            .iter()
            .filter(|p| p.gevrey > (b.x0 + p.t.sqrt() * b.y0) * (1.0 + rel_slack))
            .count()
    }
}

/// Fits 𝒴₀'s constant and the upper-bound constant over the first
/// `window_fraction` of the tracked series, then freezes them.
///
/// The constant in 𝒴₀ is the smallest making G(t) ≤ 𝒳₀ + t^{1/2}𝒴₀ on the
/// window, and c_upper the smallest (at least 1) making σ(t) lie under
/// c_upper σ₀ e^{−‖J²η₀‖²t} there.
pub fn calibrate(
    eta0: &Spectrum,
    series: &[SigmaSample],
    window_fraction: f64,
) -> Result<Calibration> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("cannot calibrate on an empty series"))?;
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let sigma0 = first.sigma;
    let x0 = first.gevrey;
    let h = sobolev_norm(eta0, 2.0);
    let h2sq = h * h;
    let poly = h.powf(1.5) + h2sq;
    let t_end = series.last().map_or(0.0, |p| p.t);
    let window_end = window_fraction * t_end;

    let excess = |p: &SigmaSample| (p.gevrey - x0).max(0.0) / p.t.sqrt();
    let mut growth_ratio_max: f64 = 0.0;
    let mut in_window: f64 = 0.0;
    let mut c_upper: f64 = 1.0;
    for p in series.iter().filter(|p| p.t > 0.0) {
        let r = excess(p);
        growth_ratio_max = growth_ratio_max.max(r);
        if p.t <= window_end {
            in_window = in_window.max(r);
            c_upper = c_upper.max(p.sigma / (sigma0 * (-h2sq * p.t).exp()));
        }
    }
    let growth_constant = if poly > 0.0 { in_window / poly } else { 0.0 };
    Ok(Calibration {
        bounds: BoundInputs::new(sigma0, x0, growth_constant * poly, h2sq, c_upper)?,
        growth_constant,
        window_end,
        growth_ratio_max,
    })
}

/// Fills `sigma_lower` and `sigma_upper` of every record.
pub fn annotate_bounds(traj: &mut Trajectory, b: &BoundInputs, variant: LowerBoundVariant) {
    for r in &mut traj.records {
        r.sigma_lower = Some(lower_bound_radius(r.t, b, variant));
        r.sigma_upper = Some(upper_bound_radius(r.t, b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid() -> Arc<SpectralGrid> {
        SpectralGrid::new(128, 8.0 * PI).unwrap()
    }

    fn cos_mode(g: &Arc<SpectralGrid>, k0: i64, amp: f64) -> Spectrum {
        Spectrum::from_modes(g.clone(), |k| {
            Complex64::new(if k.abs() == k0 { 0.5 * amp } else { 0.0 }, 0.0)
        })
    }

    fn opts(sigma0: f64) -> TrackerOptions {
        TrackerOptions {
            sigma0,
            ..TrackerOptions::default()
        }
    }

    #[test]
    fn zero_solution_keeps_sigma() {
        let g = grid();
        let (tr, series) = track_sigma(
            &Spectrum::zeros(g),
            &CoefficientSet::default(),
            &MarchOptions::new(1.0, 0.1),
            &opts(0.4),
        )
        .unwrap();
        assert!(series.iter().all(|p| p.sigma == 0.4));
        assert_eq!(series.len(), 11);
        assert!(tr
            .records
            .iter()
            .all(|r| r.sigma == Some(0.4) && r.sigma_hat.is_none()));
    }

    #[test]
    fn sigma_decreases_and_respects_lower_bound() {
        let g = grid();
        let u0 = cos_mode(&g, 8, 0.05);
        let (mut tr, series) = track_sigma(
            &u0,
            &CoefficientSet::default(),
            &MarchOptions::new(1.0, 0.01),
            &opts(0.3),
        )
        .unwrap();
        for w in series.windows(2) {
            assert!(w[1].sigma < w[0].sigma && w[1].sigma > 0.0);
        }
        let cal = calibrate(&u0, &series, 0.1).unwrap();
        annotate_bounds(&mut tr, &cal.bounds, LowerBoundVariant::ExactIntegral);
        for r in &tr.records {
            let s = r.sigma.unwrap();
            assert!(r.sigma_lower.unwrap() <= s, "t={}", r.t);
            assert!(s <= r.sigma_upper.unwrap(), "t={}", r.t);
        }
    }

    #[test]
    fn lower_bound_rate_is_increasing() {
        // A′(t) > 0, so log of the exact-integral bound is concave.
        let g = grid();
        let u0 = cos_mode(&g, 8, 0.05);
        let (_, series) = track_sigma(
            &u0,
            &CoefficientSet::default(),
            &MarchOptions::new(1.0, 0.01),
            &opts(0.3),
        )
        .unwrap();
        let mut cal = calibrate(&u0, &series, 0.1).unwrap();
        cal.bounds.y0 = cal.bounds.y0.max(0.1);
        let logs: Vec<f64> = (0..=100)
            .map(|j| {
                lower_bound_radius(
                    j as f64 / 100.0,
                    &cal.bounds,
                    LowerBoundVariant::ExactIntegral,
                )
                .ln()
            })
            .collect();
        for w in logs.windows(3) {
            assert!(w[0] + w[2] - 2.0 * w[1] <= 1e-14);
        }
    }

    #[test]
    fn halving_substep_barely_moves_sigma() {
        let g = grid();
        let u0 = cos_mode(&g, 8, 0.05);
        let c = CoefficientSet::default();
        let march = MarchOptions::new(1.0, 0.05);
        let mut coarse = opts(0.3);
        coarse.max_rel_change = 0.01;
        let mut fine = coarse;
        fine.max_rel_change = 0.005;
        let (_, a) = track_sigma(&u0, &c, &march, &coarse).unwrap();
        let (_, b) = track_sigma(&u0, &c, &march, &fine).unwrap();
        let (sa, sb) = (a.last().unwrap().sigma, b.last().unwrap().sigma);
        assert!(sa < 0.3 * 0.9, "sigma should move noticeably, got {sa}");
        assert!(((sa - sb) / sb).abs() < 5e-3, "{sa} vs {sb}");
    }

    #[test]
    fn collapse_is_reported() {
        let g = grid();
        let u0 = cos_mode(&g, 8, 3.0);
        let err = track_sigma(
            &u0,
            &CoefficientSet::default(),
            &MarchOptions::new(20.0, 0.01),
            &opts(0.3),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepCollapse { .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_options() {
        let g = grid();
        assert!(SigmaTracker::new(&g, opts(0.0)).is_err());
        assert!(SigmaTracker::new(&g, opts(100.0)).is_err());
        let mut o = opts(0.3);
        o.max_rel_change = 1.5;
        assert!(SigmaTracker::new(&g, o).is_err());
    }
}
