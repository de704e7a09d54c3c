//! TOML run configuration. Unknown keys are rejected everywhere, and
//! [`Resolved::from_config`] checks every precondition before compute starts.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::CliError;
use crate::analyticity::{LowerBoundVariant, TrackerOptions};
use crate::dynamics::MarchOptions;
use crate::estimates::{LemmaId, Profile};
use crate::norms::{check_gevrey_range, GevreyIndex};
use crate::params::{derive_coefficients, AbcdParams, CoefficientSet};
use crate::spectral::{transform_forward, RealField, SpectralGrid, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Run directory, relative to the output root.
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: Option<InitialDatum>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analyticity: Option<AnalyticityConfig>,
    #[serde(default)]
    pub estimates: EstimatesConfig,
    #[serde(default)]
    pub checks: CheckThresholds,
}

fn default_output_dir() -> String {
    "kbbm-run".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientConfig {
    Direct {
        gamma1: f64,
        gamma2: f64,
        delta1: f64,
        delta2: f64,
        gamma: f64,
    },
    Abcd {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        a1: f64,
        b1: f64,
        c1: f64,
        d1: f64,
        #[serde(default)]
        rho: Option<f64>,
    },
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        let c = CoefficientSet::default();
        CoefficientConfig::Direct {
            gamma1: c.gamma1,
            gamma2: c.gamma2,
            delta1: c.delta1,
            delta2: c.delta2,
            gamma: c.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_modes: usize,
    pub half_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Zero,
    /// amplitude · cos(ξ_k x)
    CosMode {
        k: usize,
        amplitude: f64,
    },
    /// amplitude · exp(−(x/width)²)
    Gaussian {
        width: f64,
        amplitude: f64,
    },
    /// c_k ∝ e^{−σ₀|ξ_k|} / ⟨ξ_k⟩^{s+1}, scaled so that η(0) = amplitude.
    GevreySynthetic {
        sigma0: f64,
        s: f64,
        amplitude: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Keep every `stride`-th step in the trajectory.
    pub stride: usize,
    /// Gevrey index of the stored norms (and of the Picard iteration).
    pub sigma: f64,
    pub s: f64,
    pub ceiling_factor: f64,
    pub picard: PicardConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: 1e-2,
            stride: 1,
            sigma: 0.0,
            s: 2.0,
            ceiling_factor: 1e6,
            picard: PicardConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardConfig {
    /// Horizon; when absent the local existence time with the empirical C_s.
    pub t_final: Option<f64>,
    pub intervals: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub check_resolution: bool,
    pub resolution_tol: f64,
    /// Trials per lemma when measuring C_s.
    pub cs_trials: usize,
    /// Compare against the marcher on the Picard mesh.
    pub cross_validate: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            t_final: None,
            intervals: 64,
            tol: 1e-12,
            max_iter: 100,
            check_resolution: true,
            resolution_tol: 1e-6,
            cs_trials: 200,
            cross_validate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyticityConfig {
    pub sigma0: f64,
    pub s: f64,
    pub noise_floor: f64,
    pub variant: LowerBoundVariant,
    /// Fraction of the run used to fit the bound constants.
    pub calibration_fraction: f64,
    pub max_rel_change: f64,
}

impl Default for AnalyticityConfig {
    fn default() -> Self {
        let t = TrackerOptions::default();
        Self {
            sigma0: t.sigma0,
            s: t.s,
            noise_floor: t.noise_floor,
            variant: LowerBoundVariant::ExactIntegral,
            calibration_fraction: 0.1,
            max_rel_change: t.max_rel_change,
        }
    }
}

impl AnalyticityConfig {
    pub fn tracker(&self) -> TrackerOptions {
        TrackerOptions {
            sigma0: self.sigma0,
            s: self.s,
            max_rel_change: self.max_rel_change,
            noise_floor: self.noise_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesConfig {
    pub n_trials: usize,
    pub campaigns: Vec<Campaign>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        Self {
            n_trials: 1000,
            campaigns: Vec::new(),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_ks() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

/// One estimate campaign. `profile` defaults to a band-limited family with
/// k_max = n/4 and `n_trials` to the section-wide value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Campaign {
    Multilinear {
        lemma: LemmaId,
        s: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        profile: Option<Profile>,
        #[serde(default = "default_true")]
        strict: bool,
        /// Also run on a grid with twice the modes and check the drift.
        #[serde(default)]
        refinement: bool,
        #[serde(default)]
        n_trials: Option<usize>,
    },
    Interpolation {
        s1: f64,
        s2: f64,
        theta: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        profile: Option<Profile>,
        #[serde(default)]
        n_trials: Option<usize>,
    },
    Splitting {
        s: f64,
        r: f64,
        sigma: f64,
        #[serde(default)]
        profile: Option<Profile>,
        #[serde(default)]
        n_trials: Option<usize>,
    },
    Antisymmetry {
        #[serde(default)]
        profile: Option<Profile>,
        #[serde(default)]
        n_trials: Option<usize>,
    },
    FailureDemo {
        s: f64,
        #[serde(default = "default_ks")]
        ks: Vec<usize>,
        #[serde(default)]
        half_length: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckThresholds {
    pub energy_drift: f64,
    pub h2_slack: f64,
    pub growth_slack: f64,
    /// Relative slack on σ̂ ≥ σ(t).
    pub fit_slack: f64,
    pub contraction_max: f64,
    pub picard_growth_max: f64,
    pub cross_validation: f64,
    pub interpolation: f64,
    pub splitting: f64,
    pub antisymmetry: f64,
    pub refinement_drift: f64,
}

impl Default for CheckThresholds {
    fn default() -> Self {
        Self {
            energy_drift: 1e-6,
            h2_slack: 1e-6,
            growth_slack: 1e-6,
            fit_slack: 0.05,
            contraction_max: 0.55,
            picard_growth_max: 2.0,
            cross_validation: 1e-6,
            interpolation: 1e-12,
            splitting: 1e-12,
            antisymmetry: 1e-12,
            refinement_drift: 2.0,
        }
    }
}

/// Parses `text`, applies `key.path=value` overrides and deserializes.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string().trim_end().replace('\n', " ")))
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, overrides)
}

/// Sets a dotted key. The value is read as a TOML literal when possible and
/// as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, arg: &str) -> Result<(), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{arg}` is not key=value")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub coeffs: CoefficientSet,
    pub grid: Arc<SpectralGrid>,
    pub eta0: Option<Spectrum>,
    pub march: MarchOptions,
    pub tracker: Option<TrackerOptions>,
}

fn ctx(path: &str) -> impl Fn(crate::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{path}: {e}"))
}

impl Resolved {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, CliError> {
        let coeffs = resolve_coefficients(&cfg.coefficients)?;
        let grid =
            SpectralGrid::new(cfg.grid.n_modes, cfg.grid.half_length).map_err(ctx("grid"))?;
        let eta0 = cfg
            .initial
            .as_ref()
            .map(|d| build_datum(d, &grid))
            .transpose()?;

        let sv = &cfg.solver;
        let gevrey = GevreyIndex::new(sv.sigma, sv.s).map_err(ctx("solver"))?;
        check_gevrey_range(&grid, gevrey.sigma).map_err(ctx("solver.sigma"))?;
        if !(sv.ceiling_factor > 1.0) {
            return Err(CliError::Config(format!(
                "solver.ceiling_factor must exceed 1, got {}",
                sv.ceiling_factor
            )));
        }
        let march = MarchOptions {
            t_final: sv.t_final,
            dt: sv.dt,
            stride: sv.stride,
            gevrey,
            ceiling_factor: sv.ceiling_factor,
        };
        march.steps().map_err(ctx("solver"))?;
        let p = &sv.picard;
        if p.intervals == 0 || p.max_iter == 0 || !(p.tol > 0.0) || !(p.resolution_tol > 0.0) {
            return Err(CliError::Config(
                "solver.picard: intervals, max_iter, tol and resolution_tol must be positive"
                    .into(),
            ));
        }
        if let Some(t) = p.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!(
                    "solver.picard.t_final must be positive, got {t}"
                )));
            }
        }

        let tracker = match &cfg.analyticity {
            None => None,
            Some(a) => {
                let t = a.tracker();
                crate::analyticity::SigmaTracker::new(&grid, t).map_err(ctx("analyticity"))?;
                if !(a.calibration_fraction > 0.0 && a.calibration_fraction <= 1.0) {
                    return Err(CliError::Config(format!(
                        "analyticity.calibration_fraction must lie in (0, 1], got {}",
                        a.calibration_fraction
                    )));
                }
                if !(a.noise_floor > 0.0 && a.noise_floor < 1.0) {
                    return Err(CliError::Config(format!(
                        "analyticity.noise_floor must lie in (0, 1), got {}",
                        a.noise_floor
                    )));
                }
                Some(t)
            }
        };

        validate_estimates(&cfg.estimates, &grid)?;
        Ok(Self {
            coeffs,
            grid,
            eta0,
            march,
            tracker,
        })
    }

    pub fn require_datum(&self) -> Result<&Spectrum, CliError> {
        self.eta0
            .as_ref()
            .ok_or_else(|| CliError::Config("initial: section required for this command".into()))
    }
}

pub fn resolve_coefficients(c: &CoefficientConfig) -> Result<CoefficientSet, CliError> {
    match *c {
        CoefficientConfig::Direct {
            gamma1,
            gamma2,
            delta1,
            delta2,
            gamma,
        } => {
            CoefficientSet::new(gamma1, gamma2, delta1, delta2, gamma).map_err(ctx("coefficients"))
        }
        CoefficientConfig::Abcd {
            a,
            b,
            c,
            d,
            a1,
            b1,
            c1,
            d1,
            rho,
        } => {
            let mut p = AbcdParams::new(a, b, c, d, a1, b1, c1, d1);
            p.rho = rho;
            derive_coefficients(&p).map_err(ctx("coefficients"))
        }
    }
}

pub fn build_datum(d: &InitialDatum, grid: &Arc<SpectralGrid>) -> Result<Spectrum, CliError> {
    let half = (grid.n_modes() / 2) as i64;
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(CliError::Config(format!("initial.{name} must be finite")))
        }
    };
    match *d {
        InitialDatum::Zero => Ok(Spectrum::zeros(grid.clone())),
        InitialDatum::CosMode { k, amplitude } => {
            finite("amplitude", amplitude)?;
            let k = k as i64;
            if k >= half {
                return Err(CliError::Config(format!(
                    "initial.k = {k} must be below n_modes/2 = {half}"
                )));
            }
            Ok(Spectrum::from_modes(grid.clone(), |j| {
                let c = if k == 0 && j == 0 {
                    amplitude
                } else if k != 0 && j.abs() == k {
                    0.5 * amplitude
                } else {
                    0.0
                };
                Complex64::new(c, 0.0)
            }))
        }
        InitialDatum::Gaussian { width, amplitude } => {
            finite("amplitude", amplitude)?;
            if !(width > 0.0 && width.is_finite()) {
                return Err(CliError::Config(format!(
                    "initial.width must be positive, got {width}"
                )));
            }
            let f = RealField::from_fn(grid.clone(), |x| amplitude * (-(x / width).powi(2)).exp())
                .map_err(ctx("initial"))?;
            let mut s = transform_forward(&f).map_err(ctx("initial"))?;
            s.zero_nyquist();
            Ok(s)
        }
        InitialDatum::GevreySynthetic {
            sigma0,
            s,
            amplitude,
        } => {
            finite("amplitude", amplitude)?;
            finite("s", s)?;
            if !(sigma0 > 0.0 && sigma0.is_finite()) {
                return Err(CliError::Config(format!(
                    "initial.sigma0 must be positive, got {sigma0}"
                )));
            }
            let g = grid.clone();
            let mut spectrum = Spectrum::from_modes(grid.clone(), move |k| {
                let xi = g.wavenumber(k).abs();
                Complex64::new((-sigma0 * xi).exp() / (1.0 + xi).powf(s + 1.0), 0.0)
            });
            spectrum.zero_nyquist();
            let at_origin: f64 = spectrum.coeffs().iter().map(|c| c.re).sum();
            Ok(spectrum.scaled(amplitude / at_origin))
        }
    }
}

fn validate_estimates(e: &EstimatesConfig, grid: &Arc<SpectralGrid>) -> Result<(), CliError> {
    if e.n_trials == 0 {
        return Err(CliError::Config(
            "estimates.n_trials must be positive".into(),
        ));
    }
    for (i, c) in e.campaigns.iter().enumerate() {
        let at = |msg: String| CliError::Config(format!("estimates.campaigns[{i}]: {msg}"));
        let check_profile = |p: &Option<Profile>| match p {
            Some(Profile::BandLimited { k_max }) if *k_max == 0 || *k_max >= grid.n_modes() / 2 => {
                Err(at(format!(
                    "band_limited k_max must lie in 1..{}",
                    grid.n_modes() / 2
                )))
            }
            Some(Profile::ExponentialDecay { rate }) if !(*rate >= 0.0) => {
                Err(at("exponential_decay rate must be nonnegative".into()))
            }
            Some(Profile::PolynomialDecay { power }) if !power.is_finite() => {
                Err(at("polynomial_decay power must be finite".into()))
            }
            _ => Ok(()),
        };
        let check_trials = |n: &Option<usize>| match n {
            Some(0) => Err(at("n_trials must be positive".into())),
            _ => Ok(()),
        };
        let check_sigma = |sigma: f64| {
            GevreyIndex::new(sigma, 0.0)
                .and_then(|_| check_gevrey_range(grid, sigma))
                .map_err(|e| at(e.to_string()))
        };
        match c {
            Campaign::Multilinear {
                lemma,
                s,
                sigma,
                profile,
                strict,
                refinement,
                n_trials,
            } => {
                check_profile(profile)?;
                check_trials(n_trials)?;
                check_sigma(*sigma)?;
                if *refinement {
                    let fine = SpectralGrid::new(2 * grid.n_modes(), grid.half_length())
                        .map_err(|e| at(e.to_string()))?;
                    check_gevrey_range(&fine, *sigma).map_err(|e| at(e.to_string()))?;
                }
                if *strict {
                    lemma.check_range(*s).map_err(|e| at(e.to_string()))?;
                }
            }
            Campaign::Interpolation {
                s1,
                s2,
                theta,
                sigma,
                profile,
                n_trials,
            } => {
                check_profile(profile)?;
                check_trials(n_trials)?;
                check_sigma(*sigma)?;
                if !(s1 <= s2) || !(0.0..=1.0).contains(theta) {
                    return Err(at("need s1 <= s2 and theta in [0, 1]".into()));
                }
            }
            Campaign::Splitting {
                r,
                sigma,
                profile,
                n_trials,
                ..
            } => {
                check_profile(profile)?;
                check_trials(n_trials)?;
                check_sigma(*sigma)?;
                if !(*r >= 0.0) {
                    return Err(at("r must be nonnegative".into()));
                }
            }
            Campaign::Antisymmetry { profile, n_trials } => {
                check_profile(profile)?;
                check_trials(n_trials)?;
            }
            Campaign::FailureDemo { s, ks, half_length } => {
                if !(*s <= 0.0) {
                    return Err(at(format!("failure demo needs s <= 0, got {s}")));
                }
                if ks.is_empty() || ks.iter().any(|k| !k.is_power_of_two()) {
                    return Err(at("ks must be a nonempty list of powers of two".into()));
                }
                if let Some(l) = half_length {
                    if !(*l > 0.0 && l.is_finite()) {
                        return Err(at("half_length must be positive".into()));
                    }
                }
            }
        }
    }
    Ok(())
}
