use num_complex::Complex64;
use rayon::prelude::*;

use super::{linear_propagate, nonlinear_rhs, SampleRecord, Trajectory, TrajectoryMeta};
use crate::error::{Error, Result};
use crate::norms::{gevrey_norm, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub t_final: f64,
    /// Number of mesh intervals on [0, T].
    pub intervals: usize,
    /// Stop once the sup-in-time G^{σ,s} distance between iterates is below
    /// this value.
    pub tol: f64,
    pub max_iter: usize,
    pub gevrey: GevreyIndex,
    /// Re-solve on a mesh with half the spacing and fail if the fixed point
    /// moves by more than this (in the same sup-in-time norm). `None` skips
    /// the check.
    pub resolution_tol: Option<f64>,
}

impl PicardOptions {
    pub fn new(t_final: f64, gevrey: GevreyIndex) -> Self {
        Self {
            t_final,
            intervals: 64,
            tol: 1e-12,
            max_iter: 100,
            gevrey,
            resolution_tol: Some(1e-6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardDiagnostics {
    /// Sup-in-time distance between successive iterates.
    pub distances: Vec<f64>,
    /// `distances[n] / distances[n−1]`.
    pub ratios: Vec<f64>,
    /// Largest ratio among iterations whose distance is above the rounding
    /// floor; 0 when the first correction already vanished.
    pub contraction: f64,
    pub iterations: usize,
    /// max_t ‖η(t)‖ / ‖η₀‖ in G^{σ,s}.
    pub growth: f64,
    /// Sup distance to the solution on the refined mesh, when checked.
    pub resolution_change: Option<f64>,
}

/// Iterates `η ↦ S(t)η₀ + ∫₀ᵗ S(t−t′) N(η(t′)) dt′` starting from `S(t)η₀`,
/// using the composite trapezoid rule on a uniform mesh.
pub fn picard_solve(
    eta0: &Spectrum,
    coeffs: &CoefficientSet,
    opts: &PicardOptions,
) -> Result<(Trajectory, PicardDiagnostics)> {
    if !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
        return Err(Error::invalid(format!(
            "Picard horizon must be positive and finite, got {}",
            opts.t_final
        )));
    }
    if opts.intervals == 0 || opts.max_iter == 0 {
        return Err(Error::invalid(
            "Picard needs at least one interval and one iteration",
        ));
    }
    let (states, mut diag) = iterate(eta0, coeffs, opts, opts.intervals)?;

    if let Some(limit) = opts.resolution_tol {
        let (fine, _) = iterate(eta0, coeffs, opts, 2 * opts.intervals)?;
        let mut change: f64 = 0.0;
        for (j, s) in states.iter().enumerate() {
            change = change.max(gevrey_norm(&s.sub(&fine[2 * j])?, opts.gevrey)?);
        }
        diag.resolution_change = Some(change);
        if change > limit {
            return Err(Error::QuadratureResolution { change, limit });
        }
    }

    let h = opts.t_final / opts.intervals as f64;
    let records = states
        .into_iter()
        .enumerate()
        .map(|(j, s)| SampleRecord::measure(j as f64 * h, s, coeffs, opts.gevrey))
        .collect::<Result<Vec<_>>>()?;
    let n0 = records[0].gevrey;
    diag.growth = if n0 > 0.0 {
        records.iter().map(|r| r.gevrey / n0).fold(0.0, f64::max)
    } else {
        1.0
    };
    let traj = Trajectory {
        coeffs: *coeffs,
        grid: eta0.grid().clone(),
        records,
        meta: TrajectoryMeta {
            solver: "picard".into(),
            dt: h,
            tol: Some(opts.tol),
        },
    };
    Ok((traj, diag))
}

fn iterate(
    eta0: &Spectrum,
    coeffs: &CoefficientSet,
    opts: &PicardOptions,
    intervals: usize,
) -> Result<(Vec<Spectrum>, PicardDiagnostics)> {
    let h = opts.t_final / intervals as f64;
    let times: Vec<f64> = (0..=intervals).map(|j| j as f64 * h).collect();
    let mut states: Vec<Spectrum> = times
        .iter()
        .map(|&t| linear_propagate(eta0, t, coeffs))
        .collect();
    let scale = gevrey_norm(eta0, opts.gevrey)?;
    let floor = 1e3 * f64::EPSILON * scale;

    let mut distances = Vec::new();
    loop {
        // Interaction-picture integrand S(−t′)N(η(t′)) at every node.
        let integrand = times
            .par_iter()
            .zip(states.par_iter())
            .map(|(&t, s)| Ok(linear_propagate(&nonlinear_rhs(s, coeffs)?, -t, coeffs)))
            .collect::<Result<Vec<_>>>();
        // A diverging iteration overflows before max_iter is reached.
        let integrand = match integrand {
            Err(Error::NonFinite { .. }) => {
                return Err(Error::NoConvergence {
                    iterations: distances.len() + 1,
                    distance: f64::INFINITY,
                })
            }
            r => r?,
        };

        let mut acc = eta0.clone();
        acc.zero_nyquist();
        let half_h = Complex64::new(0.5 * h, 0.0);
        let mut next = Vec::with_capacity(states.len());
        next.push(linear_propagate(&acc, 0.0, coeffs));
        for j in 1..times.len() {
            acc.axpy(half_h, &integrand[j - 1])?;
            acc.axpy(half_h, &integrand[j])?;
            next.push(linear_propagate(&acc, times[j], coeffs));
        }

        let mut d: f64 = 0.0;
        for (a, b) in next.iter().zip(&states) {
            d = d.max(gevrey_norm(&a.sub(b)?, opts.gevrey)?);
        }
        states = next;
        distances.push(d);
        if !d.is_finite() {
            return Err(Error::NoConvergence {
                iterations: distances.len(),
                distance: d,
            });
        }
        if d < opts.tol {
            break;
        }
        if distances.len() >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: distances.len(),
                distance: d,
            });
        }
    }

    let ratios: Vec<f64> = distances.windows(2).map(|w| w[1] / w[0]).collect();
    let contraction = distances
        .windows(2)
        .filter(|w| w[1] > floor)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    Ok((
        states,
        PicardDiagnostics {
            iterations: distances.len(),
            distances,
            ratios,
            contraction,
            growth: 1.0,
            resolution_change: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_ifrk4, MarchOptions, NoObserver};
    use crate::spectral::SpectralGrid;
    use std::f64::consts::PI;

    fn cos_mode(k0: i64, amp: f64) -> Spectrum {
        let g = SpectralGrid::new(64, 4.0 * PI).unwrap();
        Spectrum::from_modes(g, |k| {
            Complex64::new(if k.abs() == k0 { 0.5 * amp } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn zero_datum_converges_immediately() {
        let g = SpectralGrid::new(32, PI).unwrap();
        let opts = PicardOptions::new(1.0, GevreyIndex { sigma: 0.1, s: 2.0 });
        let (tr, diag) =
            picard_solve(&Spectrum::zeros(g), &CoefficientSet::default(), &opts).unwrap();
        assert_eq!(diag.iterations, 1);
        assert!(tr.records.iter().all(|r| r.state.is_zero()));
        assert_eq!(tr.records.len(), 65);
    }

    #[test]
    fn agrees_with_marcher_on_small_data() {
        let c = CoefficientSet::default();
        let u0 = cos_mode(4, 0.05);
        let g = GevreyIndex { sigma: 0.1, s: 2.0 };
        let opts = PicardOptions::new(2.0, g);
        let (tr, diag) = picard_solve(&u0, &c, &opts).unwrap();
        assert!(diag.contraction < 0.5, "{diag:?}");
        let m = evolve_ifrk4(&u0, &c, &MarchOptions::new(2.0, 0.01), &mut NoObserver).unwrap();
        let d = gevrey_norm(&tr.last().state.sub(&m.last().state).unwrap(), g).unwrap();
        assert!(d < 1e-6, "difference {d}");
        assert!(diag.growth < 2.0);
    }

    #[test]
    fn horizon_too_long_fails_to_converge() {
        let c = CoefficientSet::default();
        let u0 = cos_mode(4, 3.0);
        let mut opts = PicardOptions::new(200.0, GevreyIndex { sigma: 0.0, s: 2.0 });
        opts.max_iter = 15;
        opts.resolution_tol = None;
        let r = picard_solve(&u0, &c, &opts);
        assert!(matches!(r, Err(Error::NoConvergence { .. })), "{r:?}");
    }

    #[test]
    fn coarse_mesh_is_flagged() {
        let c = CoefficientSet::default();
        let u0 = cos_mode(4, 1.0);
        let mut opts = PicardOptions::new(1.0, GevreyIndex { sigma: 0.0, s: 2.0 });
        opts.intervals = 2;
        opts.resolution_tol = Some(1e-12);
        assert!(matches!(
            picard_solve(&u0, &c, &opts),
            Err(Error::QuadratureResolution { .. })
        ));
    }

    #[test]
    fn rejects_bad_horizon() {
        let u0 = cos_mode(1, 0.1);
        let opts = PicardOptions::new(0.0, GevreyIndex { sigma: 0.0, s: 2.0 });
        assert!(picard_solve(&u0, &CoefficientSet::default(), &opts).is_err());
    }
}
