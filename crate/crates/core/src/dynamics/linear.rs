use num_complex::Complex64;

use crate::params::CoefficientSet;
use crate::spectral::{evaluate_symbol, Spectrum, SymbolKind};

/// `S(t)`: `c_k ↦ exp(−iφ(ξ_k)t) c_k`. The unpaired mode, which has no
/// conjugate partner, is zeroed.
pub fn linear_propagate(u: &Spectrum, t: f64, c: &CoefficientSet) -> Spectrum {
    let mut out = u.map_modes(|xi, z| {
        z * Complex64::from_polar(1.0, -evaluate_symbol(SymbolKind::Phi, xi, c) * t)
    });
    out.zero_nyquist();
    out
}

/// Precomputed phase factors of `S(t)` for one fixed `t`.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    phases: Vec<Complex64>,
}

impl LinearPropagator {
    pub fn new(grid: &crate::spectral::SpectralGrid, t: f64, c: &CoefficientSet) -> Self {
        let nyq = grid.nyquist_index();
        let phases = grid
            .wavenumbers()
            .into_iter()
            .enumerate()
            .map(|(i, xi)| {
                if i == nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, -evaluate_symbol(SymbolKind::Phi, xi, c) * t)
                }
            })
            .collect();
        Self { phases }
    }

    pub fn apply(&self, u: &Spectrum) -> Spectrum {
        let mut out = u.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, u: &mut Spectrum) {
        for (z, p) in u.coeffs_mut().iter_mut().zip(&self.phases) {
            *z *= p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{gevrey_norm, sobolev_norm, GevreyIndex};
    use crate::spectral::SpectralGrid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_state(seed: u64) -> Spectrum {
        let g = SpectralGrid::new(128, 16.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = Spectrum::zeros(g);
        s.set(0, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
        for k in 1..64 {
            let a = (-0.05 * k as f64).exp();
            let c =
                Complex64::from_polar(a * rng.random_range(0.0..1.0), rng.random_range(0.0..6.3));
            s.set(k, c);
            s.set(-k, c.conj());
        }
        s
    }

    #[test]
    fn identity_at_zero_time() {
        let u = random_state(1);
        let v = linear_propagate(&u, 0.0, &CoefficientSet::default());
        for (a, b) in u.coeffs().iter().zip(v.coeffs()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_mode_phase_advance() {
        let c = CoefficientSet::default();
        let g = SpectralGrid::new(32, PI).unwrap();
        let mut u = Spectrum::zeros(g.clone());
        u.set(3, Complex64::new(1.0, 0.0));
        let t = 0.7;
        let v = linear_propagate(&u, t, &c);
        let phi = evaluate_symbol(SymbolKind::Phi, 3.0, &c);
        let want = Complex64::from_polar(1.0, -phi * t);
        assert!((v.get(3) - want).norm() < 1e-15);
    }

    #[test]
    fn propagator_matches_direct_evaluation() {
        let c = CoefficientSet::default();
        let u = random_state(4);
        let p = LinearPropagator::new(u.grid(), 0.37, &c);
        let a = p.apply(&u);
        let b = linear_propagate(&u, 0.37, &c);
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn unitary_and_group_law(seed in any::<u64>(), t1 in -50.0f64..50.0, t2 in -50.0f64..50.0) {
                let c = CoefficientSet::default();
                let u = random_state(seed);
                let g = GevreyIndex::new(0.3, 2.0).unwrap();
                let v = linear_propagate(&u, t1, &c);
                let n0 = gevrey_norm(&u, g).unwrap();
                prop_assert!((gevrey_norm(&v, g).unwrap() - n0).abs() <= 1e-12 * n0);
                let h0 = sobolev_norm(&u, 1.0);
                prop_assert!((sobolev_norm(&v, 1.0) - h0).abs() <= 1e-12 * h0);
                prop_assert!(v.is_hermitian());

                let composed = linear_propagate(&v, t2, &c);
                let direct = linear_propagate(&u, t1 + t2, &c);
                let scale = u.max_abs();
                for (a, b) in composed.coeffs().iter().zip(direct.coeffs()) {
                    prop_assert!((a - b).norm() <= 1e-12 * scale);
                }
            }
        }
    }
}
