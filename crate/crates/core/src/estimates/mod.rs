//! Randomized probing of the multilinear and Gevrey-space inequalities behind
//! the well-posedness theory. Constants are measured, never assumed: a
//! campaign reports the largest and mean ratio over seeded random fields.

mod inequalities;
mod multilinear;

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectral::{SpectralGrid, Spectrum};

pub use inequalities::{
    antisymmetry_check, interpolation_check, splitting_check, SplittingReport, SPLITTING_C1_GRID,
};
pub use multilinear::{
    empirical_constants, failure_demo_bilinear, multilinear_campaign, multilinear_ratio,
    EmpiricalConstants, FailureDemo, FailurePoint, LemmaId,
};

/// Spectral envelope of a random field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// Uniform magnitudes in [0, 1) on |k| ≤ k_max, exactly zero above.
    BandLimited { k_max: usize },
    /// e^{−rate|ξ|} times a uniform factor in [1/2, 3/2).
    ExponentialDecay { rate: f64 },
    /// ⟨ξ⟩^{−power} times a uniform factor in [1/2, 3/2).
    PolynomialDecay { power: f64 },
}

impl Profile {
    fn magnitude(&self, k: i64, xi: f64, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        match *self {
            Profile::BandLimited { k_max } => {
                if k.unsigned_abs() as usize <= k_max {
                    u
                } else {
                    0.0
                }
            }
            Profile::ExponentialDecay { rate } => (0.5 + u) * (-rate * xi.abs()).exp(),
            Profile::PolynomialDecay { power } => (0.5 + u) * (1.0 + xi.abs()).powf(-power),
        }
    }
}

/// Generator for trial `index` of a campaign seeded with `seed`: one ChaCha
/// stream per trial, so trials are independent of scheduling.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a real field: independent magnitude and phase for k = 1..n/2−1,
/// conjugate partners at −k, a real mean and a zero Nyquist coefficient. The
/// same number of draws is made for every mode whatever the profile.
pub fn random_field_with(
    profile: &Profile,
    rng: &mut ChaCha8Rng,
    grid: &Arc<SpectralGrid>,
) -> Spectrum {
    let n = grid.n_modes();
    let mut s = Spectrum::zeros(grid.clone());
    let m0 = profile.magnitude(0, 0.0, rng);
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    s.set(0, Complex64::new(sign * m0, 0.0));
    for k in 1..(n / 2) as i64 {
        let m = profile.magnitude(k, grid.wavenumber(k), rng);
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        let c = Complex64::from_polar(m, theta);
        s.set(k, c);
        s.set(-k, c.conj());
    }
    s
}

pub fn random_field(profile: &Profile, seed: u64, grid: &Arc<SpectralGrid>) -> Spectrum {
    random_field_with(profile, &mut ChaCha8Rng::seed_from_u64(seed), grid)
}

/// Summary of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub lemma_id: String,
    pub s: f64,
    pub sigma: f64,
    pub n_modes: usize,
    pub half_length: f64,
    pub profile: Profile,
    pub n_trials: usize,
    pub ratio_max: f64,
    pub ratio_mean: f64,
    pub seed: u64,
}

pub const TRIAL_CSV_HEADER: &str = "lemma_id,s,sigma,n_modes,n_trials,ratio_max,ratio_mean,seed";

pub fn write_reports_csv<W: Write>(reports: &[TrialReport], mut w: W) -> io::Result<()> {
    writeln!(w, "{TRIAL_CSV_HEADER}")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.lemma_id, r.s, r.sigma, r.n_modes, r.n_trials, r.ratio_max, r.ratio_mean, r.seed
        )?;
    }
    Ok(())
}

/// Evaluates `trial(rng)` for `n_trials` independent streams in parallel and
/// reduces in trial order, so the result does not depend on scheduling.
pub fn run_trials<F>(n_trials: usize, seed: u64, trial: F) -> Result<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_trials == 0 {
        return Err(crate::Error::invalid("a campaign needs at least one trial"));
    }
    let ratios = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| trial(&mut trial_rng(seed, i)))
        .collect::<Result<Vec<f64>>>()?;
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = ratios.iter().sum::<f64>() / n_trials as f64;
    Ok((max, mean))
}
