use num_complex::Complex64;

use super::{
    linear::LinearPropagator, nonlinear_rhs, Observer, SampleRecord, Trajectory, TrajectoryMeta,
};
use crate::error::{Error, Result};
use crate::norms::{gevrey_norm, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::{SpectralGrid, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Store a record every `stride` steps (the final state is always kept).
    pub stride: usize,
    /// Index of the Gevrey norm stored in records and watched by the blow-up
    /// guard.
    pub gevrey: GevreyIndex,
    /// Abort once the Gevrey norm exceeds this multiple of its initial value.
    pub ceiling_factor: f64,
}

impl MarchOptions {
    pub fn new(t_final: f64, dt: f64) -> Self {
        Self {
            t_final,
            dt,
            stride: 1,
            gevrey: GevreyIndex { sigma: 0.0, s: 2.0 },
            ceiling_factor: 1e6,
        }
    }

    /// Number of steps; errors unless `t_final / dt` is an integer within
    /// rounding.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "t_final must be nonnegative, got {}",
                self.t_final
            )));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride must be at least 1"));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(self.dt) {
            return Err(Error::invalid(format!(
                "t_final = {} is not an integer multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(n as usize)
    }
}

/// Classical RK4 applied to `w = S(−t)η`, for which `w_t = S(−t) N(S(t)w)`,
/// written back in terms of η.
#[derive(Debug, Clone)]
pub struct IfRk4Stepper {
    coeffs: CoefficientSet,
    dt: f64,
    half: LinearPropagator,
    full: LinearPropagator,
}

impl IfRk4Stepper {
    pub fn new(grid: &SpectralGrid, coeffs: CoefficientSet, dt: f64) -> Self {
        Self {
            coeffs,
            dt,
            half: LinearPropagator::new(grid, 0.5 * dt, &coeffs),
            full: LinearPropagator::new(grid, dt, &coeffs),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &Spectrum) -> Result<Spectrum> {
        let dt = self.dt;
        let c = &self.coeffs;
        let one = Complex64::new(1.0, 0.0);
        let h = Complex64::new(0.5 * dt, 0.0);

        let k1 = nonlinear_rhs(u, c)?;

        let mut a = u.clone();
        a.axpy(h, &k1)?;
        self.half.apply_in_place(&mut a);
        let k2 = nonlinear_rhs(&a, c)?;

        let u_half = self.half.apply(u);
        let mut b = u_half.clone();
        b.axpy(h, &k2)?;
        let k3 = nonlinear_rhs(&b, c)?;

        // S(dt/2)[S(dt/2)u + dt k3]
        let mut d = u_half;
        d.axpy(Complex64::new(dt, 0.0), &k3)?;
        self.half.apply_in_place(&mut d);
        let k4 = nonlinear_rhs(&d, c)?;

        // S(dt)[u + dt/6 k1] + dt/3 S(dt/2)[k2 + k3] + dt/6 k4
        let mut out = u.clone();
        out.axpy(Complex64::new(dt / 6.0, 0.0), &k1)?;
        self.full.apply_in_place(&mut out);
        let mut mid = k2;
        mid.axpy(one, &k3)?;
        self.half.apply_in_place(&mut mid);
        out.axpy(Complex64::new(dt / 3.0, 0.0), &mid)?;
        out.axpy(Complex64::new(dt / 6.0, 0.0), &k4)?;
        Ok(out)
    }
}

/// Marches `eta0` to `opts.t_final` with step `opts.dt`.
pub fn evolve_ifrk4(
    eta0: &Spectrum,
    coeffs: &CoefficientSet,
    opts: &MarchOptions,
    observer: &mut dyn Observer,
) -> Result<Trajectory> {
    let steps = opts.steps()?;
    let stepper = IfRk4Stepper::new(eta0.grid(), *coeffs, opts.dt);

    let mut first = SampleRecord::measure(0.0, eta0.clone(), coeffs, opts.gevrey)?;
    observer.annotate(&mut first)?;
    let ceiling = opts.ceiling_factor * first.gevrey;
    let mut records = vec![first];

    let mut u = eta0.clone();
    for n in 1..=steps {
        let t0 = (n - 1) as f64 * opts.dt;
        let t1 = n as f64 * opts.dt;
        let next = stepper.step(&u)?;
        let norm = gevrey_norm(&next, opts.gevrey)?;
        if !norm.is_finite() || norm > ceiling && ceiling > 0.0 {
            return Err(Error::BlowUp {
                t: t1,
                norm,
                ceiling,
            });
        }
        observer.on_step(t0, &u, t1, &next)?;
        u = next;
        if n % opts.stride == 0 || n == steps {
            let mut r = SampleRecord::measure(t1, u.clone(), coeffs, opts.gevrey)?;
            observer.annotate(&mut r)?;
            records.push(r);
        }
    }

    Ok(Trajectory {
        coeffs: *coeffs,
        grid: eta0.grid().clone(),
        records,
        meta: TrajectoryMeta {
            solver: "ifrk4".into(),
            dt: opts.dt,
            tol: None,
        },
    })
}

/// Observed order `log2(|u_dt − u_dt/2| / |u_dt/2 − u_dt/4|)` from three
/// solutions at successively halved steps.
pub fn self_convergence_order(
    coarse: &Spectrum,
    mid: &Spectrum,
    fine: &Spectrum,
    g: GevreyIndex,
) -> Result<f64> {
    let e1 = gevrey_norm(&coarse.sub(mid)?, g)?;
    let e2 = gevrey_norm(&mid.sub(fine)?, g)?;
    Ok((e1 / e2).log2())
}
