//! Periodic grid on [−L, L), discrete Fourier transforms and spectra.
//!
//! Coefficients follow the Fourier-series convention
//! `η(x) = Σ_k c_k exp(iπkx/L)` for `k = −n/2 … n/2−1`, so that Parseval reads
//! `∫|η|² = 2L Σ|c_k|²`. Internally the coefficients are stored in FFT order
//! (`0, 1, …, n/2−1, −n/2, …, −1`).

mod product;
mod symbols;

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use product::{dealiased_product, PaddedSamples};
pub use symbols::{
    apply_multiplier, evaluate_symbol, spatial_derivative, symbol_domination_constants,
    DominationConstants, SymbolKind,
};

/// Relative tolerance used when deciding whether a spectrum is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative size of the imaginary part tolerated by [`transform_inverse`].
pub const INVERSE_IMAG_TOL: f64 = 1e-10;

/// Collocation grid and its FFT plans. Shared behind an `Arc` by every
/// field and spectrum that lives on it.
pub struct SpectralGrid {
    n: usize,
    half_length: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    fwd_pad: Arc<dyn Fft<f64>>,
    inv_pad: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n_modes", &self.n)
            .field("half_length", &self.half_length)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(n_modes: usize, half_length: f64) -> Result<Arc<Self>> {
        if n_modes < 4 || !n_modes.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_modes must be a power of two >= 4, got {n_modes}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::invalid(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            n: n_modes,
            half_length,
            fwd: planner.plan_fft_forward(n_modes),
            inv: planner.plan_fft_inverse(n_modes),
            fwd_pad: planner.plan_fft_forward(2 * n_modes),
            inv_pad: planner.plan_fft_inverse(2 * n_modes),
        }))
    }

    pub fn n_modes(&self) -> usize {
        self.n
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Spacing of the wavenumber lattice, π/L.
    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    /// |ξ| of the unpaired mode k = −n/2.
    pub fn xi_max(&self) -> f64 {
        self.dxi() * (self.n / 2) as f64
    }

    pub fn wavenumber(&self, k: i64) -> f64 {
        self.dxi() * k as f64
    }

    /// Storage index of mode `k`; `k` must lie in `−n/2 … n/2−1`.
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(-n / 2 <= k && k < n / 2, "mode {k} outside grid");
        k.rem_euclid(n) as usize
    }

    /// Mode number stored at index `i`.
    pub fn mode_at(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Wavenumbers ξ_k in storage order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.wavenumber(self.mode_at(i)))
            .collect()
    }

    /// Collocation points x_j = −L + 2Lj/n.
    pub fn nodes(&self) -> Vec<f64> {
        let h = 2.0 * self.half_length / self.n as f64;
        (0..self.n)
            .map(|j| -self.half_length + h * j as f64)
            .collect()
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.n == other.n && self.half_length == other.half_length
    }

    pub(crate) fn check_same(&self, other: &SpectralGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.half_length, other.n, other.half_length
            )))
        }
    }
}

/// Point values of a real field at the grid nodes.
#[derive(Debug, Clone)]
pub struct RealField {
    grid: Arc<SpectralGrid>,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: Arc<SpectralGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                grid.n_modes()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "field samples".into(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Trapezoidal ∫|f|² over one period.
    pub fn l2_norm_sq(&self) -> f64 {
        let h = 2.0 * self.grid.half_length() / self.grid.n_modes() as f64;
        h * self.samples.iter().map(|v| v * v).sum::<f64>()
    }

    /// Discrete L² inner product, matching `l2_norm_sq`.
    pub fn inner(&self, other: &RealField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let h = 2.0 * self.grid.half_length() / self.grid.n_modes() as f64;
        Ok(h * self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>())
    }
}

/// Fourier-series coefficients of a field on a [`SpectralGrid`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let n = grid.n_modes();
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Coefficients given in storage (FFT) order.
    pub fn from_coeffs(grid: Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} modes",
                coeffs.len(),
                grid.n_modes()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Builds a spectrum mode by mode from `f(k)`.
    pub fn from_modes(grid: Arc<SpectralGrid>, f: impl Fn(i64) -> Complex64) -> Self {
        let coeffs = (0..grid.n_modes()).map(|i| f(grid.mode_at(i))).collect();
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(k)]
    }

    pub fn set(&mut self, k: i64, c: Complex64) {
        let i = self.grid.index_of(k);
        self.coeffs[i] = c;
    }

    /// Iterates `(k, ξ_k, c_k)` in storage order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, f64, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, c)| {
            let k = self.grid.mode_at(i);
            (k, self.grid.wavenumber(k), *c)
        })
    }

    /// Returns a new spectrum with `c_k ↦ f(ξ_k, c_k)`.
    pub fn map_modes(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| f(self.grid.wavenumber(self.grid.mode_at(i)), *c))
            .collect();
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_modes(|_, c| c * a)
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: Complex64, other: &Spectrum) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * y;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        let mut out = self.clone();
        out.axpy(Complex64::new(-1.0, 0.0), other)?;
        Ok(out)
    }

    pub fn zero_nyquist(&mut self) {
        let i = self.grid.nyquist_index();
        self.coeffs[i] = Complex64::new(0.0, 0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// `Σ_k |c_k|²` (without the 2L Parseval factor).
    pub fn power(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest departure from `c_{−k} = conj(c_k)`, relative to the largest
    /// coefficient. Zero for the zero spectrum.
    pub fn hermitian_residual(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.grid.n_modes() as i64;
        let mut worst = self.get(0).im.abs().max(self.get(-n / 2).im.abs());
        for k in 1..n / 2 {
            worst = worst.max((self.get(-k) - self.get(k).conj()).norm());
        }
        worst / scale
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_residual() <= HERMITIAN_TOL
    }

    /// Writes `k, xi, re, im, abs` rows ordered by increasing `k`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "k,xi,re,im,abs")?;
        let n = self.grid.n_modes() as i64;
        for k in -n / 2..n / 2 {
            let c = self.get(k);
            writeln!(
                w,
                "{},{},{},{},{}",
                k,
                self.grid.wavenumber(k),
                c.re,
                c.im,
                c.norm()
            )?;
        }
        Ok(())
    }
}

fn parity(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Samples → Fourier-series coefficients.
pub fn transform_forward(f: &RealField) -> Result<Spectrum> {
    if f.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "transform_forward input".into(),
        });
    }
    let grid = f.grid.clone();
    let n = grid.n_modes();
    let mut buf: Vec<Complex64> = f.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    grid.fwd.process(&mut buf);
    // x_0 = −L contributes the factor exp(iπk) = (−1)^k.
    let inv_n = 1.0 / n as f64;
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= parity(grid.mode_at(i)) * inv_n;
    }
    Ok(Spectrum { grid, coeffs: buf })
}

/// Complex point values of `s` at the grid nodes.
pub(crate) fn synthesize(s: &Spectrum) -> Vec<Complex64> {
    let grid = &s.grid;
    let mut buf: Vec<Complex64> = s
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * parity(grid.mode_at(i)))
        .collect();
    grid.inv.process(&mut buf);
    buf
}

/// Fourier-series coefficients → samples. Fails when the spectrum does not
/// describe a real field.
pub fn transform_inverse(s: &Spectrum) -> Result<RealField> {
    if !s.is_finite() {
        return Err(Error::NonFinite {
            context: "transform_inverse input".into(),
        });
    }
    let buf = synthesize(s);
    let scale = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let imag = buf.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if scale > 0.0 && imag > INVERSE_IMAG_TOL * scale {
        return Err(Error::SymmetryViolation {
            residual: imag / scale,
            limit: INVERSE_IMAG_TOL,
        });
    }
    Ok(RealField {
        grid: s.grid.clone(),
        samples: buf.into_iter().map(|c| c.re).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, l: f64) -> Arc<SpectralGrid> {
        SpectralGrid::new(n, l).unwrap()
    }

    /// O(n²) DFT straight from the series definition.
    fn naive_coeffs(g: &SpectralGrid, samples: &[f64]) -> Vec<(i64, Complex64)> {
        let n = g.n_modes() as i64;
        let x = g.nodes();
        (-n / 2..n / 2)
            .map(|k| {
                let xi = g.wavenumber(k);
                let c: Complex64 = x
                    .iter()
                    .zip(samples)
                    .map(|(&xj, &f)| Complex64::from_polar(f, -xi * xj))
                    .sum();
                (k, c / n as f64)
            })
            .collect()
    }

    fn random_samples(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(SpectralGrid::new(100, 1.0).is_err());
        assert!(SpectralGrid::new(2, 1.0).is_err());
        assert!(SpectralGrid::new(64, 0.0).is_err());
        assert!(SpectralGrid::new(64, f64::NAN).is_err());
    }

    #[test]
    fn wavenumbers_are_symmetric_except_nyquist() {
        let g = grid(16, 3.0);
        for k in 1..8 {
            assert_eq!(g.wavenumber(-k), -g.wavenumber(k));
            assert_eq!(g.mode_at(g.index_of(k)), k);
            assert_eq!(g.mode_at(g.index_of(-k)), -k);
        }
        assert_eq!(g.mode_at(g.nyquist_index()), -8);
        assert!((g.xi_max() - 8.0 * PI / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_has_two_half_modes() {
        let g = grid(32, 2.5);
        let f = RealField::from_fn(g.clone(), |x| (PI * x / 2.5).cos()).unwrap();
        let s = transform_forward(&f).unwrap();
        for (k, _, c) in s.modes() {
            let want = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!(
                (c - Complex64::new(want, 0.0)).norm() < 1e-15,
                "k={k} c={c}"
            );
        }
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let g = grid(16, 1.0);
        let f = RealField::new(g, vec![0.0; 16]).unwrap();
        assert!(transform_forward(&f).unwrap().is_zero());
    }

    #[test]
    fn forward_matches_naive_dft() {
        let g = grid(64, 7.0);
        let samples = random_samples(64, 3);
        let s = transform_forward(&RealField::new(g.clone(), samples.clone()).unwrap()).unwrap();
        for (k, want) in naive_coeffs(&g, &samples) {
            assert!((s.get(k) - want).norm() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn inverse_of_single_modes() {
        let g = grid(16, PI);
        let mut s = Spectrum::zeros(g.clone());
        s.set(1, Complex64::new(0.5, 0.0));
        s.set(-1, Complex64::new(0.5, 0.0));
        let f = transform_inverse(&s).unwrap();
        for (x, v) in g.nodes().iter().zip(f.samples()) {
            assert!((v - x.cos()).abs() < 1e-15);
        }
        let mut s = Spectrum::zeros(g.clone());
        s.set(0, Complex64::new(3.0, 0.0));
        let f = transform_inverse(&s).unwrap();
        assert!(f.samples().iter().all(|v| (v - 3.0).abs() < 1e-15));
    }

    #[test]
    fn inverse_rejects_non_hermitian_input() {
        let g = grid(16, PI);
        let mut s = Spectrum::zeros(g);
        s.set(1, Complex64::new(0.0, 1.0));
        assert!(!s.is_hermitian());
        assert!(matches!(
            transform_inverse(&s),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = grid(8, 1.0);
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert!(matches!(RealField::new(g, v), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn csv_rows_cover_every_mode() {
        let g = grid(8, PI);
        let s = Spectrum::from_modes(g, |k| Complex64::new(k as f64, 0.0));
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "k,xi,re,im,abs");
        assert_eq!(lines.len(), 9);
        assert!(lines[1].starts_with("-4,-4,-4,0,4"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn parseval_and_round_trip(seed in any::<u64>(), log_n in 3u32..9, l in 0.5f64..60.0) {
                let n = 1usize << log_n;
                let g = grid(n, l);
                let samples = random_samples(n, seed);
                let f = RealField::new(g.clone(), samples.clone()).unwrap();
                let s = transform_forward(&f).unwrap();
                let lhs = f.l2_norm_sq();
                let rhs = 2.0 * l * s.power();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
                prop_assert!(s.is_hermitian());
                let back = transform_inverse(&s).unwrap();
                for (a, b) in back.samples().iter().zip(&samples) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
