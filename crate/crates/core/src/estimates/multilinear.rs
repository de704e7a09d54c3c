use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{random_field_with, run_trials, Profile, TrialReport};
use crate::dynamics::CUBIC_COEFF;
use crate::dynamics::SLOPE_SQUARE_COEFF;
use crate::error::{Error, Result};
use crate::norms::{gevrey_norm, GevreyIndex};
use crate::params::CoefficientSet;
use crate::spectral::{
    apply_multiplier, dealiased_product, spatial_derivative, SpectralGrid, Spectrum, SymbolKind,
};

/// The multilinear inequalities, each of the form
/// `‖m(∂x)(product)‖_{G^{σ,s}} ≤ C Π ‖factor‖_{G^{σ,s}}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaId {
    /// ‖ω(∂x)(uv)‖ ≤ C‖u‖‖v‖, s ≥ 0
    BilinearOmega,
    /// ‖τ(∂x)(uv)‖ ≤ C‖u‖‖v‖, s ≥ 0
    BilinearTau,
    /// ‖ψ(∂x)(uvw)‖ ≤ C‖u‖‖v‖‖w‖, s ≥ 1/6
    TrilinearPsi,
    /// ‖ψ(∂x)η_x²‖ ≤ C‖η‖², s ≥ 1
    DerivsqPsi,
}

impl LemmaId {
    pub const ALL: [LemmaId; 4] = [
        LemmaId::BilinearOmega,
        LemmaId::BilinearTau,
        LemmaId::TrilinearPsi,
        LemmaId::DerivsqPsi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::BilinearOmega => "bilinear_omega",
            LemmaId::BilinearTau => "bilinear_tau",
            LemmaId::TrilinearPsi => "trilinear_psi",
            LemmaId::DerivsqPsi => "derivsq_psi",
        }
    }

    /// Smallest s for which the inequality is claimed.
    pub fn min_s(self) -> f64 {
        match self {
            LemmaId::BilinearOmega | LemmaId::BilinearTau => 0.0,
            LemmaId::TrilinearPsi => 1.0 / 6.0,
            LemmaId::DerivsqPsi => 1.0,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            LemmaId::BilinearOmega | LemmaId::BilinearTau => 2,
            LemmaId::TrilinearPsi => 3,
            LemmaId::DerivsqPsi => 1,
        }
    }

    pub fn check_range(self, s: f64) -> Result<()> {
        if s < self.min_s() {
            return Err(Error::Range {
                lemma: self.name().into(),
                s,
                min: self.min_s(),
            });
        }
        Ok(())
    }
}

/// Left side over the product of right-side norms, all in G^{σ,s}. With
/// `strict` set, an index below the lemma's range is an error; otherwise the
/// ratio is computed anyway.
pub fn multilinear_ratio(
    lemma: LemmaId,
    fields: &[&Spectrum],
    g: GevreyIndex,
    coeffs: &CoefficientSet,
    strict: bool,
) -> Result<f64> {
    if strict {
        lemma.check_range(g.s)?;
    }
    if fields.len() != lemma.arity() {
        return Err(Error::invalid(format!(
            "{} takes {} fields, got {}",
            lemma.name(),
            lemma.arity(),
            fields.len()
        )));
    }
    if fields.iter().any(|f| f.is_zero()) {
        return Err(Error::invalid(format!(
            "{} needs nonzero fields",
            lemma.name()
        )));
    }
    let lhs = match lemma {
        LemmaId::BilinearOmega => {
            apply_multiplier(SymbolKind::Omega, &dealiased_product(fields)?, coeffs)
        }
        LemmaId::BilinearTau => {
            apply_multiplier(SymbolKind::Tau, &dealiased_product(fields)?, coeffs)
        }
        LemmaId::TrilinearPsi => {
            apply_multiplier(SymbolKind::Psi, &dealiased_product(fields)?, coeffs)
        }
        LemmaId::DerivsqPsi => {
            let d = spatial_derivative(fields[0]);
            apply_multiplier(SymbolKind::Psi, &dealiased_product(&[&d, &d])?, coeffs)
        }
    };
    let mut den = 1.0;
    for f in fields {
        den *= gevrey_norm(f, g)?;
    }
    if lemma == LemmaId::DerivsqPsi {
        den *= den;
    }
    Ok(gevrey_norm(&lhs, g)? / den)
}

/// Runs `n_trials` ratios of `lemma` on independent random fields.
#[allow(clippy::too_many_arguments)]
pub fn multilinear_campaign(
    lemma: LemmaId,
    profile: &Profile,
    grid: &Arc<SpectralGrid>,
    g: GevreyIndex,
    coeffs: &CoefficientSet,
    n_trials: usize,
    seed: u64,
    strict: bool,
) -> Result<TrialReport> {
    if strict {
        lemma.check_range(g.s)?;
    }
    let (ratio_max, ratio_mean) = run_trials(n_trials, seed, |rng| {
        let fields: Vec<Spectrum> = (0..lemma.arity())
            .map(|_| random_field_with(profile, rng, grid))
            .collect();
        let refs: Vec<&Spectrum> = fields.iter().collect();
        multilinear_ratio(lemma, &refs, g, coeffs, strict)
    })?;
    Ok(TrialReport {
        lemma_id: lemma.name().into(),
        s: g.s,
        sigma: g.sigma,
        n_modes: grid.n_modes(),
        half_length: grid.half_length(),
        profile: *profile,
        n_trials,
        ratio_max,
        ratio_mean,
        seed,
    })
}

/// Measured constants of the four multilinear inequalities at one index, and
/// the combination bounding the Duhamel forcing,
/// `C_s = max(C_τ + (7/48)C_d, C_ψ/8)`, so that
/// `‖F(η)‖ ≤ C_s(‖η‖² + ‖η‖³)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalConstants {
    pub c_omega: f64,
    pub c_tau: f64,
    pub c_psi: f64,
    pub c_d: f64,
    pub c_s: f64,
    pub reports: Vec<TrialReport>,
}

pub fn empirical_constants(
    profile: &Profile,
    grid: &Arc<SpectralGrid>,
    g: GevreyIndex,
    coeffs: &CoefficientSet,
    n_trials: usize,
    seed: u64,
) -> Result<EmpiricalConstants> {
    let reports = LemmaId::ALL
        .iter()
        .map(|&l| multilinear_campaign(l, profile, grid, g, coeffs, n_trials, seed, false))
        .collect::<Result<Vec<_>>>()?;
    let (c_omega, c_tau, c_psi, c_d) = (
        reports[0].ratio_max,
        reports[1].ratio_max,
        reports[2].ratio_max,
        reports[3].ratio_max,
    );
    let c_s = (c_tau + SLOPE_SQUARE_COEFF * c_d).max(CUBIC_COEFF * c_psi);
    Ok(EmpiricalConstants {
        c_omega,
        c_tau,
        c_psi,
        c_d,
        c_s,
        reports,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailurePoint {
    pub k: usize,
    pub n_modes: usize,
    pub ratio: f64,
}

/// Bilinear ratios on the adversarial family, with the trend across k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureDemo {
    pub s: f64,
    pub points: Vec<FailurePoint>,
    /// Every ratio exceeds the previous one.
    pub monotone_growth: bool,
    /// Last ratio over first.
    pub growth_factor: f64,
}

/// Pairs u = cos(ξ_k x), v = cos(ξ_{k+1} x) on a grid with n = 8k modes. The
/// product carries mass at ξ₁, where ⟨ξ⟩^s is largest for s < 0 and ω does
/// not vanish, while ‖u‖‖v‖ ~ ⟨ξ_k⟩^{2s} shrinks as k grows.
pub fn failure_demo_bilinear(
    s: f64,
    ks: &[usize],
    half_length: f64,
    coeffs: &CoefficientSet,
) -> Result<FailureDemo> {
    if ks.is_empty() {
        return Err(Error::invalid("failure demo needs at least one k"));
    }
    let g = GevreyIndex::new(0.0, s)?;
    let mut points = Vec::with_capacity(ks.len());
    for &k in ks {
        let grid = SpectralGrid::new(8 * k, half_length)?;
        let mode = |k0: i64| {
            Spectrum::from_modes(grid.clone(), move |j| {
                Complex64::new(if j.abs() == k0 { 0.5 } else { 0.0 }, 0.0)
            })
        };
        let u = mode(k as i64);
        let v = mode(k as i64 + 1);
        points.push(FailurePoint {
            k,
            n_modes: 8 * k,
            ratio: multilinear_ratio(LemmaId::BilinearOmega, &[&u, &v], g, coeffs, false)?,
        });
    }
    let monotone_growth = points.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let growth_factor = points.last().unwrap().ratio / points[0].ratio;
    Ok(FailureDemo {
        s,
        points,
        monotone_growth,
        growth_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cos_mode(grid: &Arc<SpectralGrid>, k0: i64) -> Spectrum {
        Spectrum::from_modes(grid.clone(), |k| {
            Complex64::new(if k.abs() == k0 { 0.5 } else { 0.0 }, 0.0)
        })
    }

    #[test]
    fn constants_give_zero_omega_ratio() {
        let g = SpectralGrid::new(32, PI).unwrap();
        let mut u = Spectrum::zeros(g);
        u.set(0, Complex64::new(1.3, 0.0));
        let r = multilinear_ratio(
            LemmaId::BilinearOmega,
            &[&u, &u],
            GevreyIndex::new(0.2, 1.0).unwrap(),
            &CoefficientSet::default(),
            true,
        )
        .unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn cos_squared_omega_closed_form() {
        // cos² x = 1/2 + cos(2x)/2: ω(0) = 0 removes the mean and ω(2) = 2/5
        // scales c_{±2} = 1/4, so ‖ω(uv)‖² = 2π · 2 · (1/10)² against ‖cos‖² = π.
        let g = SpectralGrid::new(32, PI).unwrap();
        let u = cos_mode(&g, 1);
        let r = multilinear_ratio(
            LemmaId::BilinearOmega,
            &[&u, &u],
            GevreyIndex::new(0.0, 0.0).unwrap(),
            &CoefficientSet::default(),
            true,
        )
        .unwrap();
        let want = (4.0 * PI * 0.01f64).sqrt() / PI;
        assert!((r - want).abs() < 1e-14, "{r} vs {want}");
    }

    #[test]
    fn derivsq_closed_form() {
        // (−sin x)² = 1/2 − cos(2x)/2; ψ(0) = 0, ψ(2) = 2/varphi(2).
        let c = CoefficientSet::default();
        let g = SpectralGrid::new(32, PI).unwrap();
        let u = cos_mode(&g, 1);
        let r = multilinear_ratio(
            LemmaId::DerivsqPsi,
            &[&u],
            GevreyIndex::new(0.0, 1.0).unwrap(),
            &c,
            true,
        )
        .unwrap();
        let psi2 = 2.0 / (1.0 + 4.0 * c.gamma1 + 16.0 * c.delta1);
        let num = (2.0 * PI * 2.0 * (0.25 * psi2).powi(2) * 9.0).sqrt();
        let den = 2.0 * PI * 2.0 * 0.25 * 4.0;
        assert!((r - num / den).abs() < 1e-14);
    }

    #[test]
    fn strict_mode_enforces_ranges() {
        let g = SpectralGrid::new(32, PI).unwrap();
        let u = cos_mode(&g, 2);
        let c = CoefficientSet::default();
        let idx = |s| GevreyIndex::new(0.0, s).unwrap();
        assert!(matches!(
            multilinear_ratio(LemmaId::BilinearOmega, &[&u, &u], idx(-0.5), &c, true),
            Err(Error::Range { .. })
        ));
        assert!(multilinear_ratio(LemmaId::BilinearOmega, &[&u, &u], idx(-0.5), &c, false).is_ok());
        assert!(
            multilinear_ratio(LemmaId::TrilinearPsi, &[&u, &u, &u], idx(0.1), &c, true).is_err()
        );
        assert!(multilinear_ratio(
            LemmaId::TrilinearPsi,
            &[&u, &u, &u],
            idx(1.0 / 6.0),
            &c,
            true
        )
        .is_ok());
        assert!(multilinear_ratio(LemmaId::DerivsqPsi, &[&u], idx(0.9), &c, true).is_err());
        assert!(multilinear_ratio(LemmaId::BilinearTau, &[&u], idx(1.0), &c, true).is_err());
        let z = Spectrum::zeros(g);
        assert!(multilinear_ratio(LemmaId::BilinearTau, &[&u, &z], idx(1.0), &c, true).is_err());
    }

    #[test]
    fn ratios_are_grid_stable() {
        let c = CoefficientSet::default();
        let profiles = [
            Profile::BandLimited { k_max: 8 },
            Profile::ExponentialDecay { rate: 0.5 },
        ];
        for p in profiles {
            for lemma in LemmaId::ALL {
                let g = GevreyIndex::new(0.1, lemma.min_s().max(1.0)).unwrap();
                let run = |n| {
                    let grid = SpectralGrid::new(n, PI).unwrap();
                    multilinear_campaign(lemma, &p, &grid, g, &c, 200, 1, true).unwrap()
                };
                let (a, b) = (run(64), run(128));
                let drift = b.ratio_max / a.ratio_max;
                assert!(
                    drift < 2.0 && drift > 0.5,
                    "{} {p:?}: {drift}",
                    lemma.name()
                );
                assert!(a.ratio_max >= a.ratio_mean);
            }
        }
    }

    #[test]
    fn failure_family_trends() {
        let c = CoefficientSet::default();
        let ks = [8, 16, 32, 64];
        let neg = failure_demo_bilinear(-0.5, &ks, PI, &c).unwrap();
        assert!(neg.monotone_growth, "{neg:?}");
        let zero = failure_demo_bilinear(0.0, &ks, PI, &c).unwrap();
        let max = zero.points.iter().map(|p| p.ratio).fold(0.0, f64::max);
        let min = zero
            .points
            .iter()
            .map(|p| p.ratio)
            .fold(f64::INFINITY, f64::min);
        assert!(max / min < 1.5, "{zero:?}");
        let mild = failure_demo_bilinear(-0.1, &ks, PI, &c).unwrap();
        let strong = failure_demo_bilinear(-1.0, &ks, PI, &c).unwrap();
        assert!(mild.growth_factor < strong.growth_factor);
    }

    #[test]
    fn cs_combines_constants() {
        let grid = SpectralGrid::new(64, 4.0 * PI).unwrap();
        let e = empirical_constants(
            &Profile::BandLimited { k_max: 16 },
            &grid,
            GevreyIndex::new(0.1, 2.0).unwrap(),
            &CoefficientSet::default(),
            50,
            5,
        )
        .unwrap();
        assert_eq!(e.reports.len(), 4);
        assert!(e.c_s >= e.c_tau && e.c_s >= e.c_psi / 8.0);
        assert!(e.c_s.is_finite() && e.c_s > 0.0);
    }
}
