//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Criterion 9 is informational.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pnin::commands;
use pnin::config::RunConfig;
use pnin::Parallel;
use pnin_core::moments;
use pnin_core::oracle::{integrate_trajectory_with, OracleConfig};
use pnin_core::spectro::{
    adaptive_grid, doppler_g2_spectrum, eit_fwhm, eit_grid, eit_spectrum, extrapolate_zero_power,
    g2_spectrum, thermal_doppler_sigma, width_vs_power, SweepOptions, VelocityGrid,
};
use pnin_core::units::{khz, mhz, to_khz, GAMMA2_DEFAULT, GAMMA_NATURAL};
use pnin_core::ModelParams;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn(&Parallel) -> Outcome;

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Vapour-cell scale: γ₂ = π × 78 kHz, Γ = 2π × 500 MHz.
fn vapour(rabi: f64, laser_hwhm: f64) -> ModelParams {
    ModelParams::phenomenological(rabi, laser_hwhm)
}

fn bench(
    gamma_over_gamma2: f64,
    d_over_gamma2: f64,
    rabi_mhz: f64,
    delta_over_gamma2: f64,
) -> ModelParams {
    let gamma = mhz(5.0);
    let gamma2 = gamma / gamma_over_gamma2;
    ModelParams {
        rabi: mhz(rabi_mhz),
        one_photon_detuning: 0.0,
        two_photon_detuning: delta_over_gamma2 * gamma2,
        excited_decay: gamma,
        ground_pop_decay: gamma2,
        ground_coh_decay: gamma2,
        laser_hwhm: d_over_gamma2 * gamma2,
    }
}

/// Allowance added to the 3σ test where the bootstrap error collapses to
/// rounding (Δ = 0, where the channels are exactly proportional).
const FLOOR: f64 = 1e-9;

fn oracle_equivalence(exec: &Parallel) -> Outcome {
    let points = [
        bench(500.0, 10.0, 0.8, 1.0),
        bench(500.0, 10.0, 0.8, -5.0),
        bench(500.0, 10.0, 0.8, 0.0),
        bench(200.0, 2.0, 0.5, -1.0),
        bench(1000.0, 40.0, 1.0, 5.0),
        bench(100.0, 1.0, 0.6, 1.0),
    ];
    let start = Instant::now();
    let mut worst_z: f64 = 0.0;
    let mut worst_se: f64 = 0.0;
    let mut failures = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let cfg = OracleConfig {
            total_time: 2100.0,
            burn_in: 200.0,
            trajectories: 8,
            blocks_per_trajectory: 10,
            sample_every: 5,
            seed: 1000 + i as u64,
            ..OracleConfig::default()
        };
        let want = match moments::g2_zero(p).and_then(|r| r.value()) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("solver failed at point {i}: {e}")),
        };
        let mc = match integrate_trajectory_with(p, &cfg, exec) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("oracle failed at point {i}: {e}")),
        };
        let diff = (mc.g2_zero - want).abs();
        let ok = mc.std_error <= 0.05 && diff <= 3.0 * mc.std_error + FLOOR;
        if mc.std_error > 0.0 && diff > FLOOR {
            worst_z = worst_z.max(diff / mc.std_error);
        }
        worst_se = worst_se.max(mc.std_error);
        if !ok {
            failures.push(format!(
                "point {i}: solver {want:.5}, oracle {:.5} ± {:.1e}",
                mc.g2_zero, mc.std_error
            ));
        }
    }
    let elapsed = start.elapsed();
    let in_budget = elapsed <= Duration::from_secs(600);
    outcome(
        failures.is_empty() && in_budget,
        format!(
            "{} points, worst |z| {worst_z:.2}, max sigma {worst_se:.1e}, {:.1}s of 600s{}",
            points.len(),
            elapsed.as_secs_f64(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn symmetry(_: &Parallel) -> Outcome {
    let mut worst_center: f64 = 0.0;
    let mut worst_mirror: f64 = 0.0;
    for rabi in [1.0, 5.0, 10.0, 20.0, 40.0] {
        for d in [1.0, 81.0] {
            let p = vapour(mhz(rabi), mhz(d));
            let g = |delta: f64| {
                moments::g2_zero(&p.with_two_photon_detuning(delta)).and_then(|r| r.value())
            };
            match g(0.0) {
                Ok(v) => worst_center = worst_center.max((v - 1.0).abs()),
                Err(e) => return outcome(false, format!("solve failed: {e}")),
            }
            for k in [0.3, 1.0, 5.0, 20.0, 100.0] {
                let delta = k * GAMMA2_DEFAULT;
                match (g(delta), g(-delta)) {
                    (Ok(a), Ok(b)) => worst_mirror = worst_mirror.max((a - b).abs()),
                    _ => return outcome(false, format!("solve failed at delta {delta}")),
                }
            }
        }
    }
    outcome(
        worst_center <= 1e-9 && worst_mirror <= 1e-8,
        format!("max |g2(0) - 1| {worst_center:.1e} (tol 1e-9), max mirror defect {worst_mirror:.1e} (tol 1e-8)"),
    )
}

fn central_peak_shape(exec: &Parallel) -> Outcome {
    let p = vapour(mhz(60.0), mhz(1.0));
    let spec = match adaptive_grid(&p, 160).and_then(|g| g2_spectrum(&p, &g, exec)) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("sweep failed: {e}")),
    };
    let c = spec.detuning_grid.iter().position(|&d| d == 0.0).unwrap();
    let center = spec.values[c].unwrap_or(f64::NAN);
    let neighbours_lower = matches!(
        (spec.values[c - 1], spec.values[c + 1]),
        (Some(a), Some(b)) if a < center && b < center
    );
    let negative = spec
        .detuning_grid
        .iter()
        .zip(&spec.values)
        .filter(|(d, _)| **d != 0.0 && d.abs() < 20.0 * GAMMA2_DEFAULT)
        .filter_map(|(d, v)| v.filter(|v| *v < 0.0).map(|v| (*d, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    outcome(
        center > 0.0 && neighbours_lower && negative.is_some(),
        match negative {
            Some((d, v)) => format!(
                "g2(0) = {center:.4}, local maximum {neighbours_lower}, minimum {v:.4} at {:.2} gamma2",
                d / GAMMA2_DEFAULT
            ),
            None => format!("g2(0) = {center:.4}, no negative value within 20 gamma2"),
        },
    )
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = rx
        .iter()
        .zip(&ry)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum();
    let var: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    cov / var
}

const NARROW_RABI: [f64; 10] = [2.0, 3.0, 5.0, 7.0, 10.0, 14.0, 20.0, 30.0, 40.0, 60.0];
const BROAD_RABI: [f64; 8] = [1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0];

fn trend_widths(d_mhz: f64, rabi_mhz: &[f64], exec: &Parallel) -> Result<Vec<f64>, String> {
    let rabis: Vec<f64> = rabi_mhz.iter().map(|&r| mhz(r)).collect();
    let curve = width_vs_power(
        &vapour(0.0, mhz(d_mhz)),
        &rabis,
        &SweepOptions::default(),
        exec,
    )
    .map_err(|e| e.to_string())?;
    curve
        .widths
        .iter()
        .enumerate()
        .map(|(i, w)| w.ok_or_else(|| format!("no width at rabi {} MHz", rabi_mhz[i])))
        .collect()
}

fn trends(exec: &Parallel) -> Outcome {
    let start = Instant::now();
    let (narrow, broad) = match (
        trend_widths(1.0, &NARROW_RABI, exec),
        trend_widths(81.0, &BROAD_RABI, exec),
    ) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e),
    };
    let n = narrow.len();
    // the tail must be nonincreasing over at least its last three points
    let tail_start = (0..n)
        .find(|&k| narrow[k..].windows(2).all(|w| w[1] <= w[0]))
        .unwrap_or(n);
    let eventually = tail_start + 3 <= n;
    let flat = (narrow[n - 1] - narrow[n - 2]).abs() <= 0.05 * narrow[n - 2];
    let rho = spearman(&BROAD_RABI, &broad);
    let elapsed = start.elapsed();
    let khz_list = |w: &[f64]| {
        w.iter()
            .map(|w| format!("{:.1}", to_khz(*w)))
            .collect::<Vec<_>>()
            .join(",")
    };
    outcome(
        eventually && flat && rho > 0.9 && elapsed <= Duration::from_secs(1800),
        format!(
            "D=1 MHz widths [{}] kHz nonincreasing from index {tail_start}, last two within {:.2}%; D=81 MHz widths [{}] kHz Spearman {rho:.3}; {:.1}s",
            khz_list(&narrow),
            100.0 * (narrow[n - 1] - narrow[n - 2]).abs() / narrow[n - 2],
            khz_list(&broad),
            elapsed.as_secs_f64()
        ),
    )
}

fn sub_lifetime(exec: &Parallel) -> Outcome {
    let limit_khz = 78.0;
    let mut saturated = Vec::new();
    for (d, rabis) in [(1.0, &NARROW_RABI[..]), (81.0, &BROAD_RABI[..])] {
        match trend_widths(d, &rabis[rabis.len() - 1..], exec) {
            Ok(w) => saturated.push(to_khz(w[0])),
            Err(e) => return outcome(false, e),
        }
    }
    let d_values: Vec<f64> = [1.0, 9.0, 27.0, 81.0].iter().map(|&d| mhz(d)).collect();
    let curve = match pnin_core::spectro::saturated_width_vs_laserwidth(
        &vapour(0.0, 0.0),
        &d_values,
        mhz(60.0),
        &SweepOptions::default(),
        exec,
    ) {
        Ok(c) => c,
        Err(e) => return outcome(false, format!("D sweep failed: {e}")),
    };
    let sweep: Vec<f64> = curve
        .widths
        .iter()
        .map(|w| w.map_or(f64::NAN, to_khz))
        .collect();
    let below = saturated.iter().chain(&sweep).all(|&w| w < limit_khz);
    let nondecreasing = sweep.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        below && nondecreasing,
        format!(
            "criterion-4 saturated widths {:?} kHz, D sweep {{1,9,27,81}} MHz widths [{}] kHz, all < {limit_khz} kHz: {below}, nondecreasing: {nondecreasing}",
            saturated.iter().map(|w| (w * 100.0).round() / 100.0).collect::<Vec<_>>(),
            sweep.iter().map(|w| format!("{w:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn eit_limit(exec: &Parallel) -> Outcome {
    let rabis = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
    let mut powers = Vec::new();
    let mut widths = Vec::new();
    for r in rabis {
        let p = vapour(mhz(r), 0.0);
        match eit_grid(&p, 100)
            .and_then(|g| eit_spectrum(&p, &g, exec))
            .and_then(|s| eit_fwhm(&s))
        {
            Ok(w) => {
                powers.push(p.rabi * p.rabi);
                widths.push(w);
            }
            Err(e) => return outcome(false, format!("EIT width at {r} MHz: {e}")),
        }
    }
    let fit = match extrapolate_zero_power(&powers, &widths, 2) {
        Ok(f) => f,
        Err(e) => return outcome(false, format!("fit failed: {e}")),
    };
    let ratio = fit.intercept / (2.0 * GAMMA2_DEFAULT);
    outcome(
        (ratio - 1.0).abs() <= 0.05,
        format!(
            "intercept {:.2} kHz vs 2 gamma2 = {:.2} kHz (ratio {ratio:.4}, tol 5%), {} points, degree 2",
            to_khz(fit.intercept),
            to_khz(2.0 * GAMMA2_DEFAULT),
            powers.len()
        ),
    )
}

fn doppler(exec: &Parallel) -> Outcome {
    let start = Instant::now();
    let p = vapour(mhz(1.0), mhz(81.0));
    let reference = match adaptive_grid(&p, 160).and_then(|g| g2_spectrum(&p, &g, exec)) {
        Ok(s) => s.fwhm,
        Err(e) => return outcome(false, format!("phenomenological sweep failed: {e}")),
    };
    let natural = p.with_excited_decay(GAMMA_NATURAL);
    let velocity = VelocityGrid::new(21, thermal_doppler_sigma(795.0, 86.909, 325.15));
    let averaged = match adaptive_grid(&natural, 40).and_then(|g| {
        doppler_g2_spectrum(&natural, &velocity, &g, 1e-18, exec).map(|s| (g.len(), s))
    }) {
        Ok((n, s)) => (n, s.fwhm),
        Err(e) => return outcome(false, format!("Doppler sweep failed: {e}")),
    };
    let elapsed = start.elapsed();
    match (reference, averaged.1) {
        (Some(a), Some(b)) => {
            let rel = (b / a - 1.0).abs();
            outcome(
                rel <= 0.15 && averaged.0 >= 15 && elapsed <= Duration::from_secs(3600),
                format!(
                    "Gamma=2pi*5.6 MHz with {} classes on {} points: {:.2} kHz; Gamma=2pi*500 MHz: {:.2} kHz; difference {:.1}% (tol 15%); {:.1}s",
                    velocity.classes,
                    averaged.0,
                    to_khz(b),
                    to_khz(a),
                    100.0 * rel,
                    elapsed.as_secs_f64()
                ),
            )
        }
        _ => outcome(false, "a central width is missing".into()),
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn pipeline(exec: &Parallel) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let gamma2 = khz(10.0);
    let multiples = [
        -3.0, -1.0, -0.5, -0.3, -0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 3.0,
    ];
    let delta: Vec<String> = multiples
        .iter()
        .map(|m| format!("{} rad/us", m * gamma2))
        .collect();
    let text = format!(
        r#"
        seed = 11
        [model]
        rabi = "0.8 MHz"
        excited_decay = "5 MHz"
        ground_coh_decay = "10 kHz"
        laser_hwhm = "100 kHz"
        [oracle]
        time_step = "1 ns"
        total_time = "1000 us"
        burn_in = "100 us"
        trajectories = 4
        sample_every = 10
        blocks_per_trajectory = 10
        delta = {delta:?}
        emit_traces = true
        "#
    );
    let cfg = RunConfig::parse(&text).unwrap();
    let out = dir.path();
    if let Err(e) = commands::oracle(&cfg, out, exec) {
        return outcome(false, format!("oracle command failed: {e}"));
    }
    let report = read_json(&out.join("oracle_report.json"));
    let files: Vec<_> = (0..multiples.len())
        .map(|i| out.join("traces").join(format!("trace_{i:02}.csv")))
        .collect();
    let analyzed = out.join("analyzed");
    if let Err(e) = commands::analyze(&cfg, &files, &[], &analyzed) {
        return outcome(false, format!("analyze command failed: {e}"));
    }
    let side = read_json(&analyzed.join("analyzed_spectrum.json"));
    let mut rows = csv::Reader::from_path(analyzed.join("analyzed_spectrum.csv")).unwrap();
    let analyzed_g2: Vec<(f64, f64)> = rows
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();

    let mut worst_point: f64 = 0.0;
    for point in report["points"].as_array().unwrap() {
        let d = point["delta_rad_per_us"].as_f64().unwrap();
        let o = point["oracle_g2"].as_f64().unwrap();
        let a = analyzed_g2
            .iter()
            .find(|(x, _)| *x == d)
            .map(|(_, g)| *g)
            .unwrap_or(f64::NAN);
        worst_point = worst_point.max((a - o).abs());
    }

    let base = cfg.model.unwrap();
    let grid: Vec<f64> = analyzed_g2.iter().map(|(d, _)| *d).collect();
    let solver = g2_spectrum(&base, &grid, exec).ok().and_then(|s| s.fwhm);
    let width = side["fwhm_rad_per_us"].as_f64();
    let sigma = side["fwhm_std_error_rad_per_us"].as_f64();
    match (solver, width, sigma) {
        (Some(s), Some(w), Some(se)) => outcome(
            worst_point <= 1e-6 && (w - s).abs() <= 3.0 * se,
            format!(
                "analyzer width {:.4} kHz ± {:.4}, solver width on the same {}-point grid {:.4} kHz ({:.2} sigma); worst per-point |analyzer - oracle| {worst_point:.1e} (tol 1e-6)",
                to_khz(w),
                to_khz(se),
                grid.len(),
                to_khz(s),
                (w - s).abs() / se
            ),
        ),
        _ => outcome(false, format!("missing width: solver {solver:?}, analyzer {width:?} ± {sigma:?}")),
    }
}

fn informational(exec: &Parallel) -> Outcome {
    let detail = match trend_widths(1.0, &[60.0], exec) {
        Ok(w) => format!(
            "synthetic analogue at D=1 MHz, Omega=2pi*60 MHz: saturated g2 width {:.2} kHz is {:.3} of the zero-power EIT width 2 gamma2 = {:.0} kHz; no experimental value is asserted",
            to_khz(w[0]),
            w[0] / (2.0 * GAMMA2_DEFAULT),
            to_khz(2.0 * GAMMA2_DEFAULT)
        ),
        Err(e) => format!("synthetic analogue unavailable ({e}); no experimental value is asserted"),
    };
    outcome(true, detail)
}

fn main() -> ExitCode {
    // cargo passes harness flags such as --nocapture; none apply here
    let exec = Parallel::new(None, false).expect("thread pool");
    let checks: [(&str, Check); 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 symmetry exactness", symmetry),
        ("3 central peak on a negative dip", central_peak_shape),
        ("4 trend regimes", trends),
        ("5 sub-lifetime linewidth", sub_lifetime),
        ("6 EIT zero-power limit", eit_limit),
        ("7 Doppler consistency", doppler),
        ("8 end-to-end trace pipeline", pipeline),
        ("9 experimental data (informational)", informational),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let o = check(&exec);
        let status = if name.starts_with('9') {
            "INFO"
        } else if o.pass {
            "PASS"
        } else {
            failed += 1;
            "FAIL"
        };
        println!("criterion {name}: {status}: {}", o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
