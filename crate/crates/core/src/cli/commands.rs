//! The four run commands. Each writes its artifacts into a [`Staging`]
//! directory and returns its checks and headline numbers.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::Utc;
use serde_json::json;

use super::{
    AnalyticityConfig, Campaign, Check, CheckThresholds, CliError, Command, Resolved, RunConfig,
    RunManifest, Staging, Summary,
};
use crate::analyticity::{
    annotate_bounds, calibrate, estimate_radius, lower_bound_radius, track_sigma, Calibration,
    LowerBoundVariant, SigmaSample,
};
use crate::dynamics::{
    evolve_ifrk4, local_existence_time, picard_solve, MarchOptions, NoObserver, PicardOptions,
    Trajectory,
};
use crate::estimates::{
    antisymmetry_check, empirical_constants, failure_demo_bilinear, interpolation_check,
    multilinear_campaign, random_field_with, run_trials, splitting_check, write_reports_csv,
    Profile, TrialReport,
};
use crate::norms::{gevrey_norm, h2_ratio_window, GevreyIndex};
use crate::spectral::SpectralGrid;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.summary.fail > 0 {
            super::EXIT_CHECK_FAILED
        } else {
            super::EXIT_OK
        }
    }
}

type Produced = (Vec<Check>, serde_json::Value);

/// Validates `cfg`, runs `command` and promotes the run directory. Check
/// failures still produce a complete run directory; errors leave none.
pub fn execute(command: Command, cfg: &RunConfig, root: &Path) -> Result<RunOutcome, CliError> {
    let started_at = Utc::now().to_rfc3339();
    let r = Resolved::from_config(cfg)?;
    if command == Command::Radius && cfg.analyticity.is_none() {
        return Err(CliError::Config(
            "radius: an [analyticity] section is required".into(),
        ));
    }
    let mut staging = Staging::create(root, &cfg.output_dir)?;
    let (checks, results) = match command {
        Command::Simulate => simulate(cfg, &r, &mut staging)?,
        Command::Picard => picard(cfg, &r, &mut staging)?,
        Command::Radius => radius(cfg, &r, &mut staging)?,
        Command::Estimates => estimates(cfg, &r, &mut staging)?,
    };
    let manifest = RunManifest {
        tool: "kbbm".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed: cfg.seed,
        config: cfg.clone(),
        started_at,
        finished_at: Utc::now().to_rfc3339(),
        artifacts: staging.artifacts().to_vec(),
        summary: Summary::of(&checks),
        checks,
        results,
    };
    let dir = staging.promote(&manifest)?;
    Ok(RunOutcome { dir, manifest })
}

struct Tracked {
    traj: Trajectory,
    series: Vec<SigmaSample>,
    calibration: Calibration,
    variant: LowerBoundVariant,
}

fn run_tracked(a: &AnalyticityConfig, r: &Resolved) -> Result<Tracked, CliError> {
    let eta0 = r.require_datum()?;
    let (mut traj, series) = track_sigma(eta0, &r.coeffs, &r.march, &a.tracker())?;
    let calibration = calibrate(eta0, &series, a.calibration_fraction)?;
    annotate_bounds(&mut traj, &calibration.bounds, a.variant);
    Ok(Tracked {
        traj,
        series,
        calibration,
        variant: a.variant,
    })
}

fn conservation_checks(traj: &Trajectory, th: &CheckThresholds) -> Vec<Check> {
    let drift = traj.energy_drift();
    let (lo, hi) = traj.h2_ratio_range();
    if !traj.coeffs.is_hamiltonian() {
        return vec![
            Check::info(
                "energy_drift",
                Some(drift),
                "coefficients are not Hamiltonian",
            ),
            Check::info("h2_ratio_max", Some(hi), "coefficients are not Hamiltonian"),
        ];
    }
    let (wlo, whi) = h2_ratio_window(&traj.coeffs);
    vec![
        Check::at_most(
            "energy_drift",
            drift,
            th.energy_drift,
            "max |E(t) - E(0)| / E(0)",
        ),
        Check::at_least(
            "h2_ratio_min",
            lo,
            wlo * (1.0 - th.h2_slack),
            "min ||eta(t)||^2 / ||eta0||^2 in H2",
        ),
        Check::at_most(
            "h2_ratio_max",
            hi,
            whi * (1.0 + th.h2_slack),
            "max ||eta(t)||^2 / ||eta0||^2 in H2",
        ),
    ]
}

fn radius_checks(t: &Tracked, th: &CheckThresholds) -> Vec<Check> {
    let b = &t.calibration.bounds;
    let recs = &t.traj.records;
    let sigma = |r: &crate::dynamics::SampleRecord| r.sigma.unwrap_or(b.sigma0);
    let lower_ratio = recs
        .iter()
        .map(|r| r.sigma_lower.unwrap_or(0.0) / sigma(r))
        .fold(0.0, f64::max);
    let upper_ratio = recs
        .iter()
        .map(|r| sigma(r) / r.sigma_upper.unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let variants_ordered = recs.iter().all(|r| {
        lower_bound_radius(r.t, b, LowerBoundVariant::Printed)
            <= lower_bound_radius(r.t, b, LowerBoundVariant::ExactIntegral)
    });
    let monotone = t.series.windows(2).all(|w| w[1].sigma <= w[0].sigma);
    let violations = t.calibration.growth_violations(&t.series, th.growth_slack);
    let defined: Vec<f64> = recs
        .iter()
        .filter_map(|r| r.sigma_hat.map(|h| h / sigma(r)))
        .collect();
    let mut checks = vec![
        Check::at_most(
            "gevrey_growth_bound",
            violations as f64,
            0.0,
            format!(
                "samples above X0 + sqrt(t) Y0; growth constant {:.4e} fitted on t <= {}",
                t.calibration.growth_constant, t.calibration.window_end
            ),
        ),
        Check::at_most(
            "sigma_lower_bound",
            lower_ratio,
            1.0 + 1e-12,
            format!("max sigma_lower / sigma ({:?} variant)", t.variant),
        ),
        Check::at_most(
            "sigma_upper_bound",
            upper_ratio,
            1.0 + 1e-12,
            format!("max sigma / sigma_upper, c_upper = {:.6}", b.c_upper),
        ),
        Check::flag(
            "lower_variants_ordered",
            variants_ordered,
            "printed lower bound <= exact-integral lower bound",
        ),
        Check::flag("sigma_nonincreasing", monotone, "tracked sigma(t)"),
    ];
    match defined.iter().copied().reduce(f64::min) {
        Some(m) => checks.push(Check::at_least(
            "sigma_hat_dominates",
            m,
            1.0 - th.fit_slack,
            format!(
                "min sigma_hat / sigma over {} fitted records",
                defined.len()
            ),
        )),
        None => checks.push(Check::info(
            "sigma_hat_dominates",
            None,
            "decay fit undefined at every record",
        )),
    }
    checks
}

fn write_sigma_series(staging: &mut Staging, series: &[SigmaSample]) -> Result<(), CliError> {
    staging.write_with("sigma.csv", |w| {
        writeln!(w, "t,sigma,gevrey_norm")?;
        for p in series {
            writeln!(w, "{},{},{}", p.t, p.sigma, p.gevrey)?;
        }
        Ok(())
    })
}

fn simulate(cfg: &RunConfig, r: &Resolved, staging: &mut Staging) -> Result<Produced, CliError> {
    let th = &cfg.checks;
    let mut checks;
    let mut results = json!({});
    let traj = match &cfg.analyticity {
        Some(a) => {
            let t = run_tracked(a, r)?;
            checks = conservation_checks(&t.traj, th);
            checks.extend(radius_checks(&t, th));
            write_sigma_series(staging, &t.series)?;
            staging.write_json("calibration.json", &t.calibration)?;
            results["sigma_final"] = json!(t.traj.last().sigma);
            results["calibration"] = json!(t.calibration);
            t.traj
        }
        None => {
            let mut traj = evolve_ifrk4(r.require_datum()?, &r.coeffs, &r.march, &mut NoObserver)?;
            for rec in &mut traj.records {
                rec.sigma_hat =
                    estimate_radius(&rec.state, crate::analyticity::MACHINE_NOISE_FLOOR).sigma_hat;
            }
            checks = conservation_checks(&traj, th);
            traj
        }
    };
    staging.write_with("trajectory.csv", |w| traj.write_csv(w))?;
    staging.write_with("final_spectrum.csv", |w| traj.last().state.write_csv(w))?;
    results["energy_drift"] = json!(traj.energy_drift());
    results["h2_ratio_range"] = json!(traj.h2_ratio_range());
    results["t_final"] = json!(traj.last().t);
    results["records"] = json!(traj.records.len());
    Ok((checks, results))
}

fn radius(cfg: &RunConfig, r: &Resolved, staging: &mut Staging) -> Result<Produced, CliError> {
    let a = cfg.analyticity.as_ref().expect("checked by execute");
    let eta0 = r.require_datum()?;
    let fit = estimate_radius(eta0, a.noise_floor);
    staging.write_json("initial_fit.json", &fit)?;

    let t = run_tracked(a, r)?;
    let b = t.calibration.bounds;
    staging.write_with("radius.csv", |w| {
        writeln!(
            w,
            "t,sigma,sigma_hat,sigma_lower_exact,sigma_lower_printed,sigma_upper,gevrey_norm"
        )?;
        for rec in &t.traj.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                rec.t,
                rec.sigma.map(|v| v.to_string()).unwrap_or_default(),
                rec.sigma_hat.map(|v| v.to_string()).unwrap_or_default(),
                lower_bound_radius(rec.t, &b, LowerBoundVariant::ExactIntegral),
                lower_bound_radius(rec.t, &b, LowerBoundVariant::Printed),
                rec.sigma_upper.map(|v| v.to_string()).unwrap_or_default(),
                rec.gevrey
            )?;
        }
        Ok(())
    })?;
    write_sigma_series(staging, &t.series)?;
    staging.write_json("calibration.json", &t.calibration)?;

    let mut checks = vec![Check::info(
        "initial_sigma_hat",
        fit.sigma_hat,
        fit.reason
            .clone()
            .unwrap_or_else(|| format!("{} modes, r^2 = {:.6}", fit.n_points, fit.r_squared)),
    )];
    checks.extend(radius_checks(&t, &cfg.checks));
    let results = json!({
        "initial_sigma_hat": fit.sigma_hat,
        "sigma_final": t.traj.last().sigma,
        "calibration": t.calibration,
    });
    Ok((checks, results))
}

fn picard(cfg: &RunConfig, r: &Resolved, staging: &mut Staging) -> Result<Produced, CliError> {
    let eta0 = r.require_datum()?;
    let p = &cfg.solver.picard;
    let th = &cfg.checks;
    let g = r.march.gevrey;
    let norm0 = gevrey_norm(eta0, g)?;

    let constants = match p.t_final {
        Some(_) => None,
        None => {
            let profile = Profile::BandLimited {
                k_max: r.grid.n_modes() / 4,
            };
            let c = empirical_constants(&profile, &r.grid, g, &r.coeffs, p.cs_trials, cfg.seed)?;
            staging.write_with("constants.csv", |w| write_reports_csv(&c.reports, w))?;
            Some(c)
        }
    };
    let horizon = match (p.t_final, &constants) {
        (Some(t), _) => t,
        (None, Some(c)) => local_existence_time(norm0, c.c_s),
        (None, None) => unreachable!(),
    };
    if !horizon.is_finite() {
        return Err(CliError::Config(
            "picard: the zero datum has no finite existence time; set solver.picard.t_final".into(),
        ));
    }
    let opts = PicardOptions {
        t_final: horizon,
        intervals: p.intervals,
        tol: p.tol,
        max_iter: p.max_iter,
        gevrey: g,
        resolution_tol: p.check_resolution.then_some(p.resolution_tol),
    };
    let (traj, diag) = picard_solve(eta0, &r.coeffs, &opts)?;
    staging.write_with("picard_trajectory.csv", |w| traj.write_csv(w))?;
    staging.write_with("picard_iterations.csv", |w| {
        writeln!(w, "iteration,distance,ratio")?;
        for (i, d) in diag.distances.iter().enumerate() {
            let ratio = if i == 0 {
                String::new()
            } else {
                diag.ratios
                    .get(i - 1)
                    .map(|v| v.to_string())
                    .unwrap_or_default()
            };
            writeln!(w, "{},{},{}", i + 1, d, ratio)?;
        }
        Ok(())
    })?;

    let mut checks = vec![Check::at_most(
        "picard_contraction",
        diag.contraction,
        th.contraction_max,
        format!("{} iterations", diag.iterations),
    )];
    if constants.is_some() {
        checks.push(Check::at_most(
            "picard_growth",
            diag.growth,
            th.picard_growth_max * (1.0 + 1e-6),
            "max ||eta(t)|| / ||eta0|| up to the existence time",
        ));
    } else {
        checks.push(Check::info(
            "picard_growth",
            Some(diag.growth),
            "explicit horizon; no growth bound applies",
        ));
    }
    if let Some(change) = diag.resolution_change {
        checks.push(Check::info(
            "picard_resolution_change",
            Some(change),
            "sup distance to the solution on the halved mesh",
        ));
    }

    let mut results = json!({
        "horizon": horizon,
        "norm0": norm0,
        "iterations": diag.iterations,
        "contraction": diag.contraction,
        "growth": diag.growth,
    });
    if let Some(c) = &constants {
        results["c_s"] = json!(c.c_s);
        results["c_omega"] = json!(c.c_omega);
        results["c_tau"] = json!(c.c_tau);
        results["c_psi"] = json!(c.c_psi);
        results["c_d"] = json!(c.c_d);
    }

    if p.cross_validate {
        let node = horizon / p.intervals as f64;
        let sub = (node / cfg.solver.dt).ceil().max(1.0) as usize;
        let march = MarchOptions {
            t_final: horizon,
            dt: horizon / (p.intervals * sub) as f64,
            stride: sub,
            gevrey: g,
            ceiling_factor: cfg.solver.ceiling_factor,
        };
        let reference = evolve_ifrk4(eta0, &r.coeffs, &march, &mut NoObserver)?;
        if reference.records.len() != traj.records.len() {
            return Err(CliError::Runtime(crate::Error::GridMismatch(format!(
                "cross-validation produced {} records, expected {}",
                reference.records.len(),
                traj.records.len()
            ))));
        }
        let mut rows = Vec::with_capacity(traj.records.len());
        let mut sup: f64 = 0.0;
        for (a, b) in traj.records.iter().zip(&reference.records) {
            let d = gevrey_norm(&a.state.sub(&b.state)?, g)?;
            sup = sup.max(d);
            rows.push((a.t, a.gevrey, b.gevrey, d));
        }
        staging.write_with("cross_validation.csv", |w| {
            writeln!(w, "t,picard_gevrey_norm,ifrk4_gevrey_norm,difference")?;
            for (t, a, b, d) in &rows {
                writeln!(w, "{t},{a},{b},{d}")?;
            }
            Ok(())
        })?;
        checks.push(Check::at_most(
            "picard_vs_ifrk4",
            sup,
            th.cross_validation,
            format!("sup-in-time distance, IFRK4 dt = {:.3e}", march.dt),
        ));
        results["cross_validation"] = json!(sup);
    }
    Ok((checks, results))
}

fn default_profile(p: &Option<Profile>, grid: &SpectralGrid) -> Profile {
    p.unwrap_or(Profile::BandLimited {
        k_max: grid.n_modes() / 4,
    })
}

fn estimates(cfg: &RunConfig, r: &Resolved, staging: &mut Staging) -> Result<Produced, CliError> {
    let est = &cfg.estimates;
    let th = &cfg.checks;
    let grid = &r.grid;
    let seed = cfg.seed;
    if est.campaigns.is_empty() {
        return Err(CliError::Config(
            "estimates: no [[estimates.campaigns]] given".into(),
        ));
    }
    let mut checks = Vec::new();
    let mut summaries = Vec::new();
    for (i, c) in est.campaigns.iter().enumerate() {
        let trials = |n: &Option<usize>| n.unwrap_or(est.n_trials);
        let file = |kind: &str| format!("campaign_{i:02}_{kind}.csv");
        let label = |name: &str| format!("campaign_{i:02}.{name}");
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
                let g = GevreyIndex::new(*sigma, *s)?;
                let profile = default_profile(profile, grid);
                let n = trials(n_trials);
                let mut reports = vec![multilinear_campaign(
                    *lemma, &profile, grid, g, &r.coeffs, n, seed, *strict,
                )?];
                if *refinement {
                    let fine = SpectralGrid::new(2 * grid.n_modes(), grid.half_length())?;
                    reports.push(multilinear_campaign(
                        *lemma, &profile, &fine, g, &r.coeffs, n, seed, *strict,
                    )?);
                }
                staging.write_with(&file(lemma.name()), |w| write_reports_csv(&reports, w))?;
                checks.push(Check::info(
                    &label(lemma.name()),
                    Some(reports[0].ratio_max),
                    format!("empirical constant at s = {s}, sigma = {sigma}"),
                ));
                if let [a, b] = reports.as_slice() {
                    let drift = (a.ratio_max / b.ratio_max).max(b.ratio_max / a.ratio_max);
                    checks.push(Check::at_most(
                        &label("refinement_drift"),
                        drift,
                        th.refinement_drift,
                        format!("n = {} vs n = {}", a.n_modes, b.n_modes),
                    ));
                }
                summaries.push(json!({ "kind": "multilinear", "reports": reports }));
            }
            Campaign::Interpolation {
                s1,
                s2,
                theta,
                sigma,
                profile,
                n_trials,
            } => {
                let profile = default_profile(profile, grid);
                let n = trials(n_trials);
                let (max, mean) = run_trials(n, seed, |rng| {
                    interpolation_check(
                        &random_field_with(&profile, rng, grid),
                        *s1,
                        *s2,
                        *theta,
                        *sigma,
                    )
                })?;
                let report = trial_report(
                    "interpolation",
                    theta * s1 + (1.0 - theta) * s2,
                    *sigma,
                    grid,
                    profile,
                    n,
                    max,
                    mean,
                    seed,
                );
                staging.write_with(&file("interpolation"), |w| {
                    write_reports_csv(std::slice::from_ref(&report), w)
                })?;
                checks.push(Check::at_most(
                    &label("interpolation"),
                    max,
                    1.0 + th.interpolation,
                    format!("max ratio, s1 = {s1}, s2 = {s2}, theta = {theta}"),
                ));
                summaries.push(json!({ "kind": "interpolation", "reports": [report] }));
            }
            Campaign::Splitting {
                s,
                r: rr,
                sigma,
                profile,
                n_trials,
            } => {
                let profile = default_profile(profile, grid);
                let n = trials(n_trials);
                let (max, mean) = run_trials(n, seed, |rng| {
                    Ok(
                        splitting_check(&random_field_with(&profile, rng, grid), *s, *rr, *sigma)?
                            .unit_ratio,
                    )
                })?;
                let report =
                    trial_report("splitting", *s, *sigma, grid, profile, n, max, mean, seed);
                staging.write_with(&file("splitting"), |w| {
                    write_reports_csv(std::slice::from_ref(&report), w)
                })?;
                let detail = format!("max ratio at c1 = c2 = 1, r = {rr}");
                checks.push(if *rr == 1.0 {
                    Check::at_most(&label("splitting"), max, 1.0 + th.splitting, detail)
                } else {
                    Check::info(&label("splitting"), Some(max), detail)
                });
                summaries.push(json!({ "kind": "splitting", "reports": [report] }));
            }
            Campaign::Antisymmetry { profile, n_trials } => {
                let profile = default_profile(profile, grid);
                let n = trials(n_trials);
                let (max, mean) = run_trials(n, seed, |rng| {
                    antisymmetry_check(&random_field_with(&profile, rng, grid), &r.coeffs)
                })?;
                let report =
                    trial_report("antisymmetry", 0.0, 0.0, grid, profile, n, max, mean, seed);
                staging.write_with(&file("antisymmetry"), |w| {
                    write_reports_csv(std::slice::from_ref(&report), w)
                })?;
                checks.push(Check::at_most(
                    &label("antisymmetry"),
                    max,
                    th.antisymmetry,
                    "max |<v, i phi v>| / ||v||^2",
                ));
                summaries.push(json!({ "kind": "antisymmetry", "reports": [report] }));
            }
            Campaign::FailureDemo { s, ks, half_length } => {
                let l = half_length.unwrap_or(std::f64::consts::PI);
                let demo = failure_demo_bilinear(*s, ks, l, &r.coeffs)?;
                staging.write_with(&file("failure_demo"), |w| {
                    writeln!(w, "k,n_modes,ratio")?;
                    for p in &demo.points {
                        writeln!(w, "{},{},{}", p.k, p.n_modes, p.ratio)?;
                    }
                    Ok(())
                })?;
                checks.push(Check::info(
                    &label("failure_demo"),
                    Some(demo.growth_factor),
                    format!(
                        "bilinear_omega at s = {s}: ratio grows by this factor, monotone = {}",
                        demo.monotone_growth
                    ),
                ));
                summaries.push(json!({ "kind": "failure_demo", "demo": demo }));
            }
        }
    }
    Ok((checks, json!({ "campaigns": summaries })))
}

#[allow(clippy::too_many_arguments)]
fn trial_report(
    id: &str,
    s: f64,
    sigma: f64,
    grid: &Arc<SpectralGrid>,
    profile: Profile,
    n_trials: usize,
    ratio_max: f64,
    ratio_mean: f64,
    seed: u64,
) -> TrialReport {
    TrialReport {
        lemma_id: id.into(),
        s,
        sigma,
        n_modes: grid.n_modes(),
        half_length: grid.half_length(),
        profile,
        n_trials,
        ratio_max,
        ratio_mean,
        seed,
    }
}
