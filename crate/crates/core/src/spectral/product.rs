use std::sync::Arc;

use num_complex::Complex64;

use super::{parity, SpectralGrid, Spectrum};
use crate::error::{Error, Result};

/// Values of a spectrum on the twice-refined grid (2n nodes), used to form
/// products without aliasing. Retained modes |k| < n/2 of any product of up
/// to three padded fields are exact.
#[derive(Debug, Clone)]
pub struct PaddedSamples {
    grid: Arc<SpectralGrid>,
    values: Vec<f64>,
}

impl PaddedSamples {
    pub fn from_spectrum(s: &Spectrum) -> Self {
        let grid = s.grid().clone();
        let n = grid.n_modes();
        let m = 2 * n;
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = vec![zero; m];
        for (i, c) in s.coeffs().iter().enumerate() {
            let k = grid.mode_at(i);
            if i == grid.nyquist_index() {
                // The unpaired mode becomes a real cosine on the fine grid.
                let half = 0.5 * c * parity(k);
                buf[n / 2] += half;
                buf[m - n / 2] += half;
            } else {
                buf[k.rem_euclid(m as i64) as usize] = c * parity(k);
            }
        }
        grid.inv_pad.process(&mut buf);
        Self {
            grid,
            values: buf.into_iter().map(|z| z.re).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Builds a padded field from raw fine-grid values (e.g. a pointwise
    /// product computed by the caller).
    pub fn from_values(grid: Arc<SpectralGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "{} padded values for a grid of {} modes",
                values.len(),
                grid.n_modes()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn multiply(&self, other: &PaddedSamples) -> Result<PaddedSamples> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    /// Transforms back and truncates to the |k| < n/2 modes of the base grid.
    /// The unpaired mode of the result is zero.
    pub fn to_spectrum(&self) -> Spectrum {
        let grid = self.grid.clone();
        let n = grid.n_modes();
        let m = 2 * n;
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        grid.fwd_pad.process(&mut buf);
        let inv_m = 1.0 / m as f64;
        let mut out = Spectrum::zeros(grid.clone());
        for (i, c) in out.coeffs_mut().iter_mut().enumerate() {
            if i == n / 2 {
                continue;
            }
            let k = grid.mode_at(i);
            *c = buf[k.rem_euclid(m as i64) as usize] * parity(k) * inv_m;
        }
        out
    }
}

/// Spectrum of the pointwise product of two or three fields, computed on a
/// grid zero-padded to 2n nodes and truncated back.
pub fn dealiased_product(factors: &[&Spectrum]) -> Result<Spectrum> {
    if !(2..=3).contains(&factors.len()) {
        return Err(Error::invalid(format!(
            "dealiased_product takes 2 or 3 factors, got {}",
            factors.len()
        )));
    }
    let grid = factors[0].grid();
    for f in &factors[1..] {
        grid.check_same(f.grid())?;
    }
    let mut acc = PaddedSamples::from_spectrum(factors[0]);
    for f in &factors[1..] {
        acc = acc.multiply(&PaddedSamples::from_spectrum(f))?;
    }
    Ok(acc.to_spectrum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn cos_mode(grid: &Arc<SpectralGrid>, k0: i64) -> Spectrum {
        Spectrum::from_modes(grid.clone(), |k| {
            Complex64::new(if k.abs() == k0 { 0.5 } else { 0.0 }, 0.0)
        })
    }

    fn band_limited(grid: &Arc<SpectralGrid>, kmax: i64, seed: u64) -> Spectrum {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrum::zeros(grid.clone());
        s.set(0, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
        for k in 1..=kmax {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            s.set(k, c);
            s.set(-k, c.conj());
        }
        s
    }

    /// Direct convolution sum over all mode pairs (no truncation of the
    /// intermediate result, since this is a brute-force reference).
    fn brute_convolution(factors: &[&Spectrum]) -> Vec<(i64, Complex64)> {
        let n = factors[0].grid().n_modes() as i64;
        let mut acc: std::collections::BTreeMap<i64, Complex64> = (-n / 2 + 1..n / 2)
            .map(|k| (k, factors[0].get(k)))
            .collect();
        for f in &factors[1..] {
            let mut next = std::collections::BTreeMap::new();
            for (&k1, &c1) in &acc {
                for k2 in -n / 2 + 1..n / 2 {
                    *next.entry(k1 + k2).or_insert(Complex64::new(0.0, 0.0)) += c1 * f.get(k2);
                }
            }
            acc = next;
        }
        acc.into_iter().filter(|(k, _)| k.abs() < n / 2).collect()
    }

    #[test]
    fn cos_squared() {
        let g = SpectralGrid::new(32, PI).unwrap();
        let c = cos_mode(&g, 1);
        let p = dealiased_product(&[&c, &c]).unwrap();
        for (k, _, z) in p.modes() {
            let want = match k.abs() {
                0 => 0.5,
                2 => 0.25,
                _ => 0.0,
            };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn cos_cubed() {
        let g = SpectralGrid::new(32, PI).unwrap();
        let c = cos_mode(&g, 1);
        let p = dealiased_product(&[&c, &c, &c]).unwrap();
        for (k, _, z) in p.modes() {
            let want = match k.abs() {
                1 => 3.0 / 8.0,
                3 => 1.0 / 8.0,
                _ => 0.0,
            };
            assert!((z - Complex64::new(want, 0.0)).norm() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn product_with_zero_is_zero() {
        let g = SpectralGrid::new(32, 2.0).unwrap();
        let f = band_limited(&g, 10, 1);
        let z = Spectrum::zeros(g);
        assert!(dealiased_product(&[&f, &z]).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn full_band_products_match_brute_force() {
        let g = SpectralGrid::new(32, 3.0).unwrap();
        let a = band_limited(&g, 15, 11);
        let b = band_limited(&g, 15, 12);
        let c = band_limited(&g, 15, 13);
        for factors in [vec![&a, &b], vec![&a, &b, &c]] {
            let p = dealiased_product(&factors).unwrap();
            for (k, want) in brute_convolution(&factors) {
                assert!((p.get(k) - want).norm() < 1e-13, "k={k}");
            }
            assert!(p.is_hermitian());
        }
    }

    #[test]
    fn nested_products_agree_for_resolvable_inputs() {
        let g = SpectralGrid::new(64, 3.0).unwrap();
        let a = band_limited(&g, 10, 1);
        let b = band_limited(&g, 10, 2);
        let c = band_limited(&g, 10, 3);
        let direct = dealiased_product(&[&a, &b, &c]).unwrap();
        let ab = dealiased_product(&[&a, &b]).unwrap();
        let nested = dealiased_product(&[&ab, &c]).unwrap();
        let scale = direct.max_abs();
        for (x, y) in direct.coeffs().iter().zip(nested.coeffs()) {
            assert!((x - y).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn unpaired_input_mode_is_treated_as_cosine() {
        // c_{−n/2} = 1 is the sampled cosine cos(πn x/(2L)); its square is
        // (1 + cos(2·))/2 whose retained part is the constant 1/2.
        let g = SpectralGrid::new(16, PI).unwrap();
        let mut s = Spectrum::zeros(g.clone());
        s.set(-8, Complex64::new(1.0, 0.0));
        let p = dealiased_product(&[&s, &s]).unwrap();
        assert!((p.get(0).re - 0.5).abs() < 1e-15);
        assert!(p.coeffs().iter().skip(1).all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn errors() {
        let g = SpectralGrid::new(16, 1.0).unwrap();
        let h = SpectralGrid::new(32, 1.0).unwrap();
        let a = Spectrum::zeros(g.clone());
        let b = Spectrum::zeros(h);
        assert!(matches!(
            dealiased_product(&[&a, &b]),
            Err(Error::GridMismatch(_))
        ));
        assert!(dealiased_product(&[&a]).is_err());
        assert!(dealiased_product(&[&a, &a, &a, &a]).is_err());
    }
}
