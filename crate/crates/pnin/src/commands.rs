//! Subcommands of the `pnin` binary. Each writes CSV tables, each with a
//! JSON sidecar that embeds the resolved configuration, and returns the
//! paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use pnin_core::moments::{self, cross_correlation_with_floor};
use pnin_core::oracle::{emit_synthetic_traces, integrate_trajectory_with};
use pnin_core::spectro::{
    adaptive_grid, doppler_g2_spectrum, eit_fwhm, eit_grid, eit_spectrum, extrapolate_zero_power,
    g2_spectrum_with, saturated_width_vs_laserwidth, width_vs_power, SpectrumKind, SweepOptions,
    ZeroPowerFit, SATURATION_TOLERANCE,
};
use pnin_core::trace::{assemble_spectrum, AnalyzerOptions};
use pnin_core::{ModelParams, SpectrumResult, TrajectoryStats, TrendCurve};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DeltaGrid, RunConfig};
use crate::error::{CliError, CliResult};
use crate::exec::Parallel;
use crate::io::{table_paths, write_csv, write_json, write_trace};

#[derive(Debug, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

const TOOL: Tool = Tool {
    name: env!("CARGO_PKG_NAME"),
    version: env!("CARGO_PKG_VERSION"),
};

/// Common sidecar envelope; `body` keys are merged at the top level.
fn sidecar(command: &str, cfg: &RunConfig, body: Value) -> Value {
    let mut v = json!({
        "tool": TOOL,
        "command": command,
    });
    if let (Value::Object(m), Value::Object(b)) = (&mut v, body) {
        m.extend(b);
    }
    v["config"] = serde_json::to_value(cfg).unwrap_or(Value::Null);
    v
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::data(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
        .at(dir, None)
    })
}

fn spectrum_metrics(spec: &SpectrumResult) -> Value {
    let failed: Vec<f64> = spec
        .detuning_grid
        .iter()
        .zip(&spec.values)
        .filter(|(_, v)| v.is_none())
        .map(|(d, _)| *d)
        .collect();
    json!({
        "kind": spec.kind,
        "points": spec.detuning_grid.len(),
        "failed_points": failed,
        "peak": spec.peak_value,
        "baseline": spec.baseline,
        "baseline_source": spec.baseline_source,
        "fwhm_rad_per_us": spec.fwhm,
        "wing_minima": spec.wing_minima,
        "width_error": spec.width_error,
    })
}

fn write_spectrum(
    dir: &Path,
    stem: &str,
    command: &str,
    cfg: &RunConfig,
    spec: &SpectrumResult,
    extra: Value,
) -> CliResult<Vec<PathBuf>> {
    let (csv_path, json_path) = table_paths(dir, stem);
    let column = match spec.kind {
        SpectrumKind::G2 => "g2",
        SpectrumKind::Transmission => "transmission",
    };
    write_csv(
        &csv_path,
        &["delta_rad_per_us", column],
        spec.detuning_grid
            .iter()
            .zip(&spec.values)
            .map(|(d, v)| vec![Some(*d), *v]),
    )?;
    let mut body = spectrum_metrics(spec);
    if let (Value::Object(m), Value::Object(e)) = (&mut body, extra) {
        m.extend(e);
    }
    write_json(&json_path, &sidecar(command, cfg, body))?;
    Ok(vec![csv_path, json_path])
}

fn write_trend(
    dir: &Path,
    stem: &str,
    cfg: &RunConfig,
    curve: &TrendCurve,
    extra: Value,
) -> CliResult<Vec<PathBuf>> {
    let (csv_path, json_path) = table_paths(dir, stem);
    write_csv(
        &csv_path,
        &["axis", "width"],
        curve
            .axis
            .iter()
            .zip(&curve.widths)
            .map(|(a, w)| vec![Some(*a), *w]),
    )?;
    let mut body = json!({ "labels": curve.labels });
    if let (Value::Object(m), Value::Object(e)) = (&mut body, extra) {
        m.extend(e);
    }
    write_json(&json_path, &sidecar("trends", cfg, body))?;
    Ok(vec![csv_path, json_path])
}

/// A spectrum where every point failed is a numerical failure of the run.
fn require_values(spec: &SpectrumResult, what: &str) -> CliResult<()> {
    if spec.values.iter().all(Option::is_none) {
        return Err(CliError {
            kind: crate::ErrorKind::Numerical,
            message: format!("{what}: no grid point could be evaluated"),
            path: None,
            line: None,
        });
    }
    if let Some(e) = &spec.width_error {
        log::warn!("{what}: no central width ({e})");
    }
    Ok(())
}

fn warn_regime(p: &ModelParams) {
    if let Some(w) = p.regime_warning() {
        log::warn!(
            "rabi {} rad/us is not small against {} rad/us; results leave the weak-drive regime",
            w.rabi,
            w.limit
        );
    }
}

fn delta_grid(grid: &DeltaGrid, p: &ModelParams) -> CliResult<Vec<f64>> {
    Ok(match grid {
        DeltaGrid::Explicit(d) => d.clone(),
        DeltaGrid::Adaptive { points_per_side } => adaptive_grid(p, *points_per_side)?,
    })
}

fn indexed_stem(prefix: &str, i: usize, many: bool) -> String {
    if many {
        format!("{prefix}_{i:02}")
    } else {
        prefix.to_string()
    }
}

/// g²(0) against Δ for the model Ω, or for every Ω of `sweep.rabi`. With a
/// `[doppler]` section the velocity-averaged spectra are written as well.
pub fn spectrum(cfg: &RunConfig, out: &Path, exec: &Parallel) -> CliResult<Vec<PathBuf>> {
    let base = cfg.model()?;
    let rabis = cfg.sweep.rabi.clone().unwrap_or_else(|| vec![base.rabi]);
    if rabis.is_empty() {
        return Err(CliError::config("sweep.rabi is empty"));
    }
    ensure_dir(out)?;
    let many = rabis.len() > 1;
    let mut written = Vec::new();
    for (i, &rabi) in rabis.iter().enumerate() {
        let p = base.with_rabi(rabi);
        warn_regime(&p);
        let grid = delta_grid(&cfg.sweep.delta, &p)?;
        let spec = g2_spectrum_with(&p, &grid, cfg.variance_floor, exec)?;
        require_values(&spec, &format!("spectrum at rabi {rabi} rad/us"))?;
        written.extend(write_spectrum(
            out,
            &indexed_stem("spectrum", i, many),
            "spectrum",
            cfg,
            &spec,
            json!({ "params": p }),
        )?);
    }
    if let Some(d) = &cfg.doppler {
        for (i, &rabi) in rabis.iter().enumerate() {
            let p = base.with_rabi(rabi).with_excited_decay(d.excited_decay);
            let grid = match &cfg.sweep.delta {
                DeltaGrid::Explicit(g) => g.clone(),
                DeltaGrid::Adaptive { .. } => adaptive_grid(&p, d.points_per_side)?,
            };
            let spec = doppler_g2_spectrum(&p, &d.velocity, &grid, cfg.variance_floor, exec)?;
            require_values(&spec, &format!("doppler spectrum at rabi {rabi} rad/us"))?;
            written.extend(write_spectrum(
                out,
                &indexed_stem("doppler_spectrum", i, many),
                "spectrum",
                cfg,
                &spec,
                json!({
                    "params": p,
                    "velocity_grid": d.velocity,
                    "notes": ["velocity classes add as independent emitters; inter-class correlations are neglected"],
                }),
            )?);
        }
    }
    Ok(written)
}

fn sweep_options(cfg: &RunConfig) -> SweepOptions {
    SweepOptions {
        points_per_side: cfg.sweep.points_per_side,
        variance_floor: cfg.variance_floor,
    }
}

/// Width against Ω² at the model D, and, when `sweep.laser_hwhm` is given,
/// the saturated width against D.
pub fn trends(cfg: &RunConfig, out: &Path, exec: &Parallel) -> CliResult<Vec<PathBuf>> {
    let base = cfg.model()?;
    let rabis = cfg
        .sweep
        .rabi
        .as_ref()
        .ok_or_else(|| CliError::config("trends needs `sweep.rabi`"))?;
    if rabis.is_empty() {
        return Err(CliError::config(
            "sweep.rabi must list at least one Rabi frequency",
        ));
    }
    let laser = match &cfg.sweep.laser_hwhm {
        Some(d) if d.is_empty() => {
            return Err(CliError::config(
                "sweep.laser_hwhm must list at least one laser width",
            ))
        }
        Some(d) => Some((
            d,
            cfg.sweep.rabi_saturating.ok_or_else(|| {
                CliError::config("sweep.laser_hwhm needs `sweep.rabi_saturating`")
            })?,
        )),
        None => None,
    };
    ensure_dir(out)?;
    let opts = sweep_options(cfg);
    for &r in rabis {
        warn_regime(&base.with_rabi(r));
    }

    let mut written = Vec::new();
    let power = width_vs_power(&base, rabis, &opts, exec)?;
    written.extend(write_trend(
        out,
        "trend_power",
        cfg,
        &power,
        json!({ "rabi_rad_per_us": rabis, "params": base }),
    )?);

    if let Some((d_values, rabi_sat)) = laser {
        let curve = saturated_width_vs_laserwidth(&base, d_values, rabi_sat, &opts, exec)?;
        let nondecreasing = curve
            .widths
            .windows(2)
            .all(|w| matches!(w, [Some(a), Some(b)] if b >= a));
        written.extend(write_trend(
            out,
            "trend_laserwidth",
            cfg,
            &curve,
            json!({
                "params": base,
                "rabi_saturating_rad_per_us": rabi_sat,
                "saturation_tolerance": SATURATION_TOLERANCE,
                "nondecreasing": nondecreasing,
                "notes": ["saturation is judged by comparing the widths at rabi_saturating/sqrt(2) and rabi_saturating; the tolerance is a modelling choice"],
            }),
        )?);
    }
    Ok(written)
}

/// Absolute slack added to the 3σ agreement test. At Δ = 0 both channels
/// are exactly proportional and the bootstrap error collapses to rounding.
pub const AGREEMENT_FLOOR: f64 = 1e-9;

/// Seed of the `i`-th detuning point of an oracle run.
pub fn point_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Largest |oracle − solver| / se over covariance entries resolved above
/// three standard errors, with the number of such entries.
fn covariance_z(stats: &TrajectoryStats, solver: &moments::MomentState) -> (Option<f64>, usize) {
    let mut worst: Option<f64> = None;
    let mut n = 0;
    for j in 0..8 {
        for k in 0..8 {
            let (a, b, e) = (
                stats.covariance[(j, k)],
                solver.covariance[(j, k)],
                stats.covariance_std_error[(j, k)],
            );
            for (x, y, se) in [(a.re, b.re, e.re), (a.im, b.im, e.im)] {
                if se > 0.0 && y.abs() >= 3.0 * se {
                    n += 1;
                    let z = (x - y).abs() / se;
                    worst = Some(worst.map_or(z, |w: f64| w.max(z)));
                }
            }
        }
    }
    (worst, n)
}

/// Monte-Carlo validation of the moment solver at every `oracle.delta`,
/// optionally writing the synthetic traces under `traces/`.
pub fn oracle(cfg: &RunConfig, out: &Path, exec: &Parallel) -> CliResult<Vec<PathBuf>> {
    let section = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::config("oracle needs an [oracle] section"))?;
    let base = cfg.model()?;
    if section.delta.is_empty() {
        return Err(CliError::config("oracle.delta is empty"));
    }
    section.config.validate(&base)?;
    ensure_dir(out)?;
    let trace_dir = out.join("traces");
    if section.emit_traces {
        ensure_dir(&trace_dir)?;
    }

    let mut written = Vec::new();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for (i, &delta) in section.delta.iter().enumerate() {
        let p = base.with_two_photon_detuning(delta);
        let state = moments::solve(&p)?;
        let solver = cross_correlation_with_floor(&state, cfg.variance_floor);
        let mut oc = section.config;
        oc.seed = point_seed(section.config.seed, i);
        let stats = if section.emit_traces {
            let (trace, stats) = emit_synthetic_traces(&p, &oc, exec)?;
            let path = trace_dir.join(format!("trace_{i:02}.csv"));
            let side = write_trace(
                &path,
                &trace,
                sidecar(
                    "oracle",
                    cfg,
                    json!({ "params": p, "oracle_seed": oc.seed }),
                ),
            )?;
            written.push(path);
            written.push(side);
            stats
        } else {
            integrate_trajectory_with(&p, &oc, exec)?
        };

        let oracle_g2 = (!stats.correlation.degenerate).then_some(stats.g2_zero);
        let se = stats.std_error.is_finite().then_some(stats.std_error);
        let z = match (solver.g2_zero, oracle_g2, se) {
            (Some(s), Some(o), Some(se)) if se > 0.0 => Some((o - s) / se),
            _ => None,
        };
        let within = match (solver.g2_zero, oracle_g2, se) {
            (Some(s), Some(o), Some(se)) => Some((o - s).abs() <= 3.0 * se + AGREEMENT_FLOOR),
            _ => None,
        };
        let mean_dev = (0..8)
            .map(|k| (stats.mean_state.0[k] - state.mean.0[k]).norm())
            .fold(0.0, f64::max);
        let (cov_z, cov_n) = covariance_z(&stats, &state);
        let flag = |b: bool| Some(if b { 1.0 } else { 0.0 });
        rows.push(vec![
            Some(delta),
            solver.g2_zero,
            oracle_g2,
            se,
            z,
            flag(solver.degenerate),
            flag(stats.correlation.degenerate),
        ]);
        points.push(json!({
            "delta_rad_per_us": delta,
            "oracle_seed": oc.seed,
            "solver_g2": solver.g2_zero,
            "oracle_g2": oracle_g2,
            "oracle_std_error": se,
            "z_score": z,
            "within_3_sigma": within,
            "solver_degenerate": solver.degenerate,
            "oracle_degenerate": stats.correlation.degenerate,
            "solver_variances": [solver.var_im_coh1, solver.var_im_coh2],
            "oracle_variances": [stats.correlation.var_im_coh1, stats.correlation.var_im_coh2],
            "mean_state_max_abs_deviation": mean_dev,
            "covariance_max_abs_z": cov_z,
            "covariance_entries_compared": cov_n,
            "ground_population_range": [stats.population_range.0, stats.population_range.1],
            "samples": stats.samples,
        }));
    }

    let (csv_path, json_path) = table_paths(out, "oracle_report");
    write_csv(
        &csv_path,
        &[
            "delta_rad_per_us",
            "solver_g2",
            "oracle_g2",
            "oracle_std_error",
            "z_score",
            "solver_degenerate",
            "oracle_degenerate",
        ],
        rows,
    )?;
    let degenerate = points
        .iter()
        .any(|p| p["solver_degenerate"] == true || p["oracle_degenerate"] == true);
    let all_within = points.iter().all(|p| p["within_3_sigma"] != false);
    write_json(
        &json_path,
        &sidecar(
            "oracle",
            cfg,
            json!({
                "params": base,
                "degenerate": degenerate,
                "all_within_3_sigma": all_within,
                "points": points,
            }),
        ),
    )?;
    written.push(csv_path);
    written.push(json_path);
    if degenerate {
        log::warn!("oracle report contains degenerate points (a channel has no fluctuations)");
    }
    Ok(written)
}

/// Reads trace files, assembles their g²(0) spectrum and extracts the
/// central width. `labels` override the detuning of individual files.
pub fn analyze(
    cfg: &RunConfig,
    files: &[PathBuf],
    labels: &[(PathBuf, f64)],
    out: &Path,
) -> CliResult<Vec<PathBuf>> {
    if files.is_empty() {
        return Err(CliError::config("analyze needs at least one trace file"));
    }
    for (l, _) in labels {
        if !files.iter().any(|f| same_file(f, l)) {
            return Err(CliError::config(format!(
                "--label names {}, which is not among the trace files",
                l.display()
            )));
        }
    }
    let traces = files
        .iter()
        .map(|f| {
            let over = labels
                .iter()
                .rev()
                .find(|(l, _)| same_file(f, l))
                .map(|(_, d)| *d);
            crate::io::read_trace(f, over)
        })
        .collect::<CliResult<Vec<_>>>()?;

    let opts = AnalyzerOptions {
        blocks: cfg.analyze.blocks,
        resamples: cfg.analyze.resamples,
        seed: cfg.seed,
        variance_floor: cfg.variance_floor,
        detrend: cfg.analyze.detrend.window(),
    };
    let assembled = assemble_spectrum(&traces, &opts)?;
    require_values(&assembled.spectrum, "analyzed spectrum")?;
    ensure_dir(out)?;
    let sources: Vec<Value> = traces
        .iter()
        .zip(files)
        .map(|(t, f)| json!({ "file": f, "delta_rad_per_us": t.delta_label, "samples": t.len(), "sampling_interval_us": t.time_step }))
        .collect();
    write_spectrum(
        out,
        "analyzed_spectrum",
        "analyze",
        cfg,
        &assembled.spectrum,
        json!({
            "std_errors": assembled.std_errors,
            "fwhm_std_error_rad_per_us": assembled.width_std_error,
            "duplicate_labels": assembled.duplicates,
            "traces": sources,
            "notes": ["no detector bandwidth correction is applied"],
        }),
    )
}

fn same_file(a: &Path, b: &Path) -> bool {
    a == b || matches!((fs::canonicalize(a), fs::canonicalize(b)), (Ok(x), Ok(y)) if x == y)
}

fn fit_json(fit: &ZeroPowerFit, ground_coh_decay: Option<f64>) -> Value {
    json!({
        "intercept_rad_per_us": fit.intercept,
        "intercept_over_2gamma2": ground_coh_decay.map(|g| fit.intercept / (2.0 * g)),
        "coefficients": fit.fit.coefficients,
        "residual_norm": fit.fit.residual_norm,
        "condition": fit.fit.condition,
    })
}

fn check_fit_size(n: usize, degree: usize, what: &str) -> CliResult<()> {
    if n < degree + 2 {
        return Err(CliError::config(format!(
            "a degree {degree} fit needs at least {} {what}, got {n}",
            degree + 2
        )));
    }
    Ok(())
}

/// EIT transmission spectra, FWHM against power and the zero-power
/// intercept, for the solver widths and for measured widths if given.
pub fn eit(cfg: &RunConfig, out: &Path, exec: &Parallel) -> CliResult<Vec<PathBuf>> {
    let e = cfg
        .eit
        .as_ref()
        .ok_or_else(|| CliError::config("eit needs an [eit] section"))?;
    if e.rabi.is_empty() && e.data.is_none() {
        return Err(CliError::config("eit needs `eit.rabi` or `eit.data`"));
    }
    if !e.rabi.is_empty() {
        check_fit_size(e.rabi.len(), e.degree, "Rabi frequencies")?;
    }
    if let Some((p, _)) = &e.data {
        check_fit_size(p.len(), e.degree, "measured widths")?;
    }
    ensure_dir(out)?;
    let calibration = e.power_calibration.unwrap_or(1.0);
    let mut written = Vec::new();

    if !e.rabi.is_empty() {
        let base = cfg.model()?;
        let mut powers = Vec::with_capacity(e.rabi.len());
        let mut widths = Vec::with_capacity(e.rabi.len());
        for (i, &rabi) in e.rabi.iter().enumerate() {
            let p = base.with_rabi(rabi);
            let grid = eit_grid(&p, e.points_per_side)?;
            let spec = eit_spectrum(&p, &grid, exec)?;
            require_values(&spec, &format!("EIT spectrum at rabi {rabi} rad/us"))?;
            let w = eit_fwhm(&spec)?;
            written.extend(write_spectrum(
                out,
                &format!("eit_spectrum_{i:02}"),
                "eit",
                cfg,
                &spec,
                json!({ "params": p }),
            )?);
            powers.push(rabi * rabi * calibration);
            widths.push(w);
        }
        let fit = extrapolate_zero_power(&powers, &widths, e.degree)?;
        let curve = TrendCurve {
            axis: powers.clone(),
            widths: widths.iter().copied().map(Some).collect(),
            labels: [
                ("axis".to_string(), power_label(e.power_calibration)),
                ("width".to_string(), "eit_fwhm_rad_per_us".to_string()),
            ]
            .into_iter()
            .collect(),
        };
        let (csv_path, json_path) = table_paths(out, "eit_fwhm");
        write_csv(
            &csv_path,
            &["axis", "width"],
            curve
                .axis
                .iter()
                .zip(&curve.widths)
                .map(|(a, w)| vec![Some(*a), *w]),
        )?;
        write_json(
            &json_path,
            &sidecar(
                "eit",
                cfg,
                json!({
                    "labels": curve.labels,
                    "rabi_rad_per_us": e.rabi,
                    "degree": e.degree,
                    "zero_power_fit": fit_json(&fit, Some(base.ground_coh_decay)),
                }),
            ),
        )?;
        written.push(csv_path);
        written.push(json_path);
    }

    if let Some((powers, widths)) = &e.data {
        let fit = extrapolate_zero_power(powers, widths, e.degree)?;
        let path = out.join("eit_data_fit.json");
        write_json(
            &path,
            &sidecar(
                "eit",
                cfg,
                json!({
                    "power": powers,
                    "fwhm_rad_per_us": widths,
                    "degree": e.degree,
                    "zero_power_fit": fit_json(&fit, cfg.model.map(|m| m.ground_coh_decay)),
                }),
            ),
        )?;
        written.push(path);
    }
    Ok(written)
}

fn power_label(calibration: Option<f64>) -> String {
    match calibration {
        Some(_) => "power_uW".into(),
        None => "rabi_squared_rad2_per_us2".into(),
    }
}
