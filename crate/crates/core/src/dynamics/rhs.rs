use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::CoefficientSet;
use crate::spectral::{apply_multiplier, spatial_derivative, PaddedSamples, Spectrum, SymbolKind};

/// Coefficient of ψ(∂x)η³.
pub const CUBIC_COEFF: f64 = 1.0 / 8.0;
/// Coefficient of ψ(∂x)η_x².
pub const SLOPE_SQUARE_COEFF: f64 = 7.0 / 48.0;

/// `F(η) = τ(∂x)η² − (1/8)ψ(∂x)η³ − (7/48)ψ(∂x)η_x²`, the term under the
/// Duhamel integral.
pub fn duhamel_forcing(u: &Spectrum, c: &CoefficientSet) -> Result<Spectrum> {
    let eta = PaddedSamples::from_spectrum(u);
    let eta_x = PaddedSamples::from_spectrum(&spatial_derivative(u));
    let sq = eta.multiply(&eta)?;
    let cube = sq.multiply(&eta)?;
    let slope_sq = eta_x.multiply(&eta_x)?;

    let mut f = apply_multiplier(SymbolKind::Tau, &sq.to_spectrum(), c);
    f.axpy(
        Complex64::new(-CUBIC_COEFF, 0.0),
        &apply_multiplier(SymbolKind::Psi, &cube.to_spectrum(), c),
    )?;
    f.axpy(
        Complex64::new(-SLOPE_SQUARE_COEFF, 0.0),
        &apply_multiplier(SymbolKind::Psi, &slope_sq.to_spectrum(), c),
    )?;
    if !f.is_finite() {
        return Err(Error::NonFinite {
            context: "nonlinear term".into(),
        });
    }
    Ok(f)
}

/// `N(η) = −i F(η)`, so that `η_t = −iφ(∂x)η + N(η)`.
pub fn nonlinear_rhs(u: &Spectrum, c: &CoefficientSet) -> Result<Spectrum> {
    let mut f = duhamel_forcing(u, c)?;
    for z in f.coeffs_mut() {
        *z = Complex64::new(z.im, -z.re);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dealiased_product, evaluate_symbol, SpectralGrid};
    use std::collections::BTreeMap;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn cos_mode(grid: &Arc<SpectralGrid>, k0: i64, amp: f64) -> Spectrum {
        Spectrum::from_modes(grid.clone(), |k| {
            Complex64::new(if k.abs() == k0 { 0.5 * amp } else { 0.0 }, 0.0)
        })
    }

    /// Mode map of a sparse spectrum, convolved by brute force.
    fn convolve(
        a: &BTreeMap<i64, Complex64>,
        b: &BTreeMap<i64, Complex64>,
    ) -> BTreeMap<i64, Complex64> {
        let mut out = BTreeMap::new();
        for (&k1, &c1) in a {
            for (&k2, &c2) in b {
                *out.entry(k1 + k2).or_insert(Complex64::new(0.0, 0.0)) += c1 * c2;
            }
        }
        out
    }

    #[test]
    fn zero_and_constant_states_have_no_forcing() {
        let c = CoefficientSet::default();
        let g = SpectralGrid::new(32, PI).unwrap();
        assert!(nonlinear_rhs(&Spectrum::zeros(g.clone()), &c)
            .unwrap()
            .is_zero());
        let mut k0 = Spectrum::zeros(g);
        k0.set(0, Complex64::new(0.8, 0.0));
        assert!(nonlinear_rhs(&k0, &c).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn small_cosine_matches_hand_convolution() {
        let c = CoefficientSet::default();
        let g = SpectralGrid::new(64, 4.0).unwrap();
        let k0 = 3;
        let xi0 = g.wavenumber(k0);
        for eps in [1e-1, 1e-2, 1e-3] {
            let u = cos_mode(&g, k0, eps);
            let n = nonlinear_rhs(&u, &c).unwrap();

            let eta: BTreeMap<i64, Complex64> = [
                (k0, Complex64::new(eps / 2.0, 0.0)),
                (-k0, Complex64::new(eps / 2.0, 0.0)),
            ]
            .into();
            let eta_x: BTreeMap<i64, Complex64> = [
                (k0, Complex64::new(0.0, xi0 * eps / 2.0)),
                (-k0, Complex64::new(0.0, -xi0 * eps / 2.0)),
            ]
            .into();
            let sq = convolve(&eta, &eta);
            let cube = convolve(&sq, &eta);
            let slope = convolve(&eta_x, &eta_x);
            let sym = |kind, k: i64| evaluate_symbol(kind, g.wavenumber(k), &c);
            let mut want: BTreeMap<i64, Complex64> = BTreeMap::new();
            for (&k, &z) in &sq {
                *want.entry(k).or_default() += z * sym(SymbolKind::Tau, k);
            }
            for (&k, &z) in &cube {
                *want.entry(k).or_default() -= z * sym(SymbolKind::Psi, k) * CUBIC_COEFF;
            }
            for (&k, &z) in &slope {
                *want.entry(k).or_default() -= z * sym(SymbolKind::Psi, k) * SLOPE_SQUARE_COEFF;
            }
            for (k, _, z) in n.modes() {
                let f = want.get(&k).copied().unwrap_or_default();
                let expect = Complex64::new(0.0, -1.0) * f;
                assert!(
                    (z - expect).norm() < 1e-16 + 1e-13 * eps * eps,
                    "eps={eps} k={k}"
                );
            }
            // Leading order is the quadratic τ term; the cubic part is O(ε³).
            let quad =
                apply_multiplier(SymbolKind::Tau, &dealiased_product(&[&u, &u]).unwrap(), &c);
            let lead = quad.map_modes(|_, z| Complex64::new(0.0, -1.0) * z);
            let slope_part = apply_multiplier(
                SymbolKind::Psi,
                &dealiased_product(&[&spatial_derivative(&u), &spatial_derivative(&u)]).unwrap(),
                &c,
            )
            .scaled(SLOPE_SQUARE_COEFF)
            .map_modes(|_, z| Complex64::new(0.0, 1.0) * z);
            let mut resid = n.sub(&lead).unwrap();
            resid = resid.sub(&slope_part).unwrap();
            assert!(resid.max_abs() <= 0.1 * eps.powi(3));
        }
    }

    #[test]
    fn forcing_preserves_realness() {
        let c = CoefficientSet::default();
        let g = SpectralGrid::new(64, 5.0).unwrap();
        let f = crate::spectral::RealField::from_fn(g, |x| {
            0.3 * (-(x * x)).exp() + 0.1 * (x / 5.0 * PI).sin()
        })
        .unwrap();
        let u = crate::spectral::transform_forward(&f).unwrap();
        let n = nonlinear_rhs(&u, &c).unwrap();
        assert!(n.is_hermitian());
        assert!(n.get(0).norm() < 1e-16);
    }
}
