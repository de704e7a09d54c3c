//! Time evolution of `iη_t = φ(∂x)η + τ(∂x)η² − (1/8)ψ(∂x)η³ − (7/48)ψ(∂x)η_x²`.
//!
//! The linear part is the unitary group `S(t)`; [`evolve_ifrk4`] marches the
//! full equation in integrating-factor form and [`picard_solve`] iterates the
//! Duhamel map on a fixed time mesh.

mod ifrk4;
mod linear;
mod picard;
mod rhs;

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::Result;
use crate::norms::{self, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::{SpectralGrid, Spectrum};

pub use ifrk4::{evolve_ifrk4, self_convergence_order, IfRk4Stepper, MarchOptions};
pub use linear::{linear_propagate, LinearPropagator};
pub use picard::{picard_solve, PicardDiagnostics, PicardOptions};
pub use rhs::{duhamel_forcing, nonlinear_rhs, CUBIC_COEFF, SLOPE_SQUARE_COEFF};

/// `T̄ = 1 / (8 C_s ‖η₀‖ (1 + ‖η₀‖))`, the guaranteed local existence time.
/// Infinite for the zero datum.
pub fn local_existence_time(norm0: f64, c_s: f64) -> f64 {
    assert!(norm0 >= 0.0, "norm0 must be nonnegative");
    assert!(c_s > 0.0, "C_s must be positive");
    if norm0 == 0.0 {
        return f64::INFINITY;
    }
    1.0 / (8.0 * c_s * norm0 * (1.0 + norm0))
}

/// One sampled time of a run.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub t: f64,
    pub state: Spectrum,
    pub energy: f64,
    /// ‖η‖_{H²} with the ⟨ξ⟩ weight.
    pub h2: f64,
    /// ‖η‖²_{H²} with the polynomial weight 1 + ξ² + ξ⁴.
    pub h2_poly_sq: f64,
    /// Gevrey norm at the index in force for this record (the tracked σ(t)
    /// when a radius tracker is attached).
    pub gevrey: f64,
    pub sigma_hat: Option<f64>,
    /// Tracked σ(t), when a tracker is attached.
    pub sigma: Option<f64>,
    pub sigma_lower: Option<f64>,
    pub sigma_upper: Option<f64>,
}

impl SampleRecord {
    pub fn measure(t: f64, state: Spectrum, c: &CoefficientSet, g: GevreyIndex) -> Result<Self> {
        Ok(Self {
            t,
            energy: norms::energy(&state, c),
            h2: norms::sobolev_norm(&state, 2.0),
            h2_poly_sq: norms::h2_poly_norm_sq(&state),
            gevrey: norms::gevrey_norm(&state, g)?,
            state,
            sigma_hat: None,
            sigma: None,
            sigma_lower: None,
            sigma_upper: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub solver: String,
    pub dt: f64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub coeffs: CoefficientSet,
    pub grid: Arc<SpectralGrid>,
    pub records: Vec<SampleRecord>,
    pub meta: TrajectoryMeta,
}

pub const TRAJECTORY_CSV_HEADER: &str =
    "t,energy,h2_norm,gevrey_norm,sigma_hat,sigma_lower,sigma_upper,sigma";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Trajectory {
    pub fn last(&self) -> &SampleRecord {
        self.records
            .last()
            .expect("trajectory has at least one record")
    }

    /// One row per record; undefined values are left empty.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.t,
                r.energy,
                r.h2,
                r.gevrey,
                opt(r.sigma_hat),
                opt(r.sigma_lower),
                opt(r.sigma_upper),
                opt(r.sigma)
            )?;
        }
        Ok(())
    }

    /// Largest |E(t) − E(0)| / E(0); zero for the zero solution.
    pub fn energy_drift(&self) -> f64 {
        let e0 = self.records[0].energy;
        if e0 == 0.0 {
            return 0.0;
        }
        self.records
            .iter()
            .map(|r| (r.energy - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    /// Extremes of ‖η(t)‖²_{H²,poly} / ‖η₀‖²_{H²,poly} over the records.
    pub fn h2_ratio_range(&self) -> (f64, f64) {
        let h0 = self.records[0].h2_poly_sq;
        if h0 == 0.0 {
            return (1.0, 1.0);
        }
        self.records
            .iter()
            .map(|r| r.h2_poly_sq / h0)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), q| {
                (lo.min(q), hi.max(q))
            })
    }
}

/// Hooks run by the time marchers.
pub trait Observer {
    /// Called after every step with the states at both ends of the step.
    fn on_step(&mut self, _t0: f64, _u0: &Spectrum, _t1: f64, _u1: &Spectrum) -> Result<()> {
        Ok(())
    }

    /// Fills analysis fields of a record before it is stored.
    fn annotate(&self, _record: &mut SampleRecord) -> Result<()> {
        Ok(())
    }
}

/// Observer that does nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoObserver;

impl Observer for NoObserver {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existence_time_formula() {
        assert!((local_existence_time(1.0, 1.0) - 1.0 / 16.0).abs() < 1e-16);
        assert!((local_existence_time(3.0, 2.0) - 1.0 / 192.0).abs() < 1e-16);
        assert!(local_existence_time(0.0, 1.0).is_infinite());
        let mut prev = f64::INFINITY;
        for n in [1e-6, 1e-3, 0.1, 1.0, 10.0] {
            let t = local_existence_time(n, 0.7);
            assert!(t < prev);
            prev = t;
        }
    }
}
