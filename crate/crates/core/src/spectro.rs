//! Sweeps over detuning, drive strength and laser width, central-width
//! extraction, EIT transmission, zero-power extrapolation and Doppler
//! averaging.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::{polyfit, PolyFit};
use crate::model::{build_first_moment_generators, build_generators, Component, ModelParams};
use crate::moments::{self, cross_correlation_with_floor, MomentState, DEFAULT_VARIANCE_FLOOR};
use crate::stats::MonotoneCubic;

/// What the values of a [`SpectrumResult`] are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    G2,
    Transmission,
}

/// Where the reference level of the half-maximum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineSource {
    /// Mean of the two minima flanking the central peak.
    WingMinima,
    /// Mean of the two outermost grid values.
    GridEdge,
}

/// How [`extract_central_width_with`] picks the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselinePolicy {
    /// Wing minima when both sides have one, otherwise the grid edges.
    Auto,
    GridEdge,
}

/// A swept spectrum and its central-peak metrics. Points whose solve failed
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub kind: SpectrumKind,
    /// Two-photon detunings, rad/μs, strictly increasing.
    pub detuning_grid: Vec<f64>,
    pub values: Vec<Option<f64>>,
    pub peak_value: Option<f64>,
    pub baseline: Option<f64>,
    pub baseline_source: Option<BaselineSource>,
    /// Full width at half of the central peak amplitude, rad/μs.
    pub fwhm: Option<f64>,
    /// (Δ, value) of the left and right wing minima.
    pub wing_minima: Option<((f64, f64), (f64, f64))>,
    /// Why `fwhm` is absent, if it is.
    pub width_error: Option<String>,
}

impl SpectrumResult {
    /// Wraps sampled values and attempts the width extraction appropriate
    /// to `kind`.
    pub fn from_values(
        detuning_grid: Vec<f64>,
        values: Vec<Option<f64>>,
        kind: SpectrumKind,
    ) -> Self {
        let mut s = SpectrumResult {
            kind,
            detuning_grid,
            values,
            peak_value: None,
            baseline: None,
            baseline_source: None,
            fwhm: None,
            wing_minima: None,
            width_error: None,
        };
        let policy = match kind {
            SpectrumKind::G2 => BaselinePolicy::Auto,
            SpectrumKind::Transmission => BaselinePolicy::GridEdge,
        };
        match extract_central_width_with(&s, policy) {
            Ok(w) => {
                s.peak_value = Some(w.peak_value);
                s.baseline = Some(w.baseline);
                s.baseline_source = Some(w.baseline_source);
                s.fwhm = Some(w.fwhm);
                s.wing_minima = w.wing_minima;
            }
            Err(e) => s.width_error = Some(e.to_string()),
        }
        s
    }

    /// Grid points with a value.
    pub fn present(&self) -> (Vec<f64>, Vec<f64>) {
        self.detuning_grid
            .iter()
            .zip(&self.values)
            .filter_map(|(d, v)| v.map(|v| (*d, v)))
            .unzip()
    }
}

/// Width metric along one sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCurve {
    pub axis: Vec<f64>,
    /// Widths in rad/μs; `None` where the extraction failed.
    pub widths: Vec<Option<f64>>,
    pub labels: BTreeMap<String, String>,
}

/// Result of [`extract_central_width`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralWidth {
    pub fwhm: f64,
    pub peak_value: f64,
    pub baseline: f64,
    pub baseline_source: BaselineSource,
    pub wing_minima: Option<((f64, f64), (f64, f64))>,
    /// Half-level crossings (left, right).
    pub crossings: (f64, f64),
}

pub fn extract_central_width(spec: &SpectrumResult) -> Result<CentralWidth> {
    extract_central_width_with(spec, BaselinePolicy::Auto)
}

/// Finds the peak at Δ = 0, its baseline and the two half-level crossings
/// by monotone cubic interpolation. With a grid-edge baseline the crossings
/// must lie within the inner half of the grid, otherwise the grid is taken
/// to be too narrow.
pub fn extract_central_width_with(
    spec: &SpectrumResult,
    policy: BaselinePolicy,
) -> Result<CentralWidth> {
    let (x, y) = spec.present();
    let n = x.len();
    let c = x
        .iter()
        .position(|d| *d == 0.0)
        .ok_or(Error::GridMissingCenter)?;
    if c == 0 || c + 1 >= n || !(y[c] > y[c - 1] && y[c] > y[c + 1]) {
        return Err(Error::NoPeak);
    }

    // walk downhill from the centre to the first local minimum on each side
    let mut right = c + 1;
    while right + 1 < n && y[right + 1] < y[right] {
        right += 1;
    }
    let mut left = c - 1;
    while left > 0 && y[left - 1] < y[left] {
        left -= 1;
    }
    let right_min = right + 1 < n;
    let left_min = left > 0;

    let (baseline, source, wing_minima) = if policy == BaselinePolicy::Auto && left_min && right_min
    {
        (
            0.5 * (y[left] + y[right]),
            BaselineSource::WingMinima,
            Some(((x[left], y[left]), (x[right], y[right]))),
        )
    } else {
        (0.5 * (y[0] + y[n - 1]), BaselineSource::GridEdge, None)
    };
    let peak = y[c];
    if !(peak > baseline) {
        return Err(Error::NoPeak);
    }
    let level = baseline + 0.5 * (peak - baseline);

    let interp = MonotoneCubic::new(&x, &y).ok_or(Error::NoPeak)?;
    // the crossings lie on the descending flanks between the peak and the
    // wing minima (or the grid ends)
    let right_cross = (c..right)
        .find(|&i| y[i] >= level && y[i + 1] < level)
        .and_then(|i| interp.crossing_in_segment(i, level))
        .ok_or(Error::UnbracketedCrossing)?;
    let left_cross = (left + 1..=c)
        .rev()
        .find(|&i| y[i] >= level && y[i - 1] < level)
        .and_then(|i| interp.crossing_in_segment(i - 1, level))
        .ok_or(Error::UnbracketedCrossing)?;

    // an edge baseline is only meaningful once the spectrum has flattened;
    // require the crossings to sit in the inner half of the grid
    if source == BaselineSource::GridEdge
        && (right_cross > 0.5 * x[n - 1] || left_cross < 0.5 * x[0])
    {
        return Err(Error::UnbracketedCrossing);
    }

    Ok(CentralWidth {
        fwhm: right_cross - left_cross,
        peak_value: peak,
        baseline,
        baseline_source: source,
        wing_minima,
        crossings: (left_cross, right_cross),
    })
}

/// Optical pumping rate Ω² / (2(Γ + 2D)).
pub fn pump_rate(omega: f64, gamma: f64, d: f64) -> Result<f64> {
    let denom = gamma + 2.0 * d;
    if !(denom > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParams(format!(
            "pump rate needs excited_decay + 2 laser_hwhm > 0, got {denom}"
        )));
    }
    Ok(omega * omega / (2.0 * denom))
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (r * i as f64).exp()).collect()
}

/// Symmetric grid {0} ∪ ±geomspace(lo, hi, per_side).
pub fn symmetric_log_grid(lo: f64, hi: f64, per_side: usize) -> Vec<f64> {
    let side = geomspace(lo, hi, per_side.max(1));
    let mut g: Vec<f64> = side.iter().rev().map(|d| -d).collect();
    g.push(0.0);
    g.extend(side);
    g
}

/// Detuning grid for a g²(0) spectrum: logarithmic from γ₂/50 out to
/// ±max(10 Γ′_p, 20 γ₂).
pub fn adaptive_grid(params: &ModelParams, per_side: usize) -> Result<Vec<f64>> {
    let g2 = params.ground_coh_decay;
    if !(g2 > 0.0) {
        return Err(Error::InvalidParams(
            "adaptive grid needs ground_coh_decay > 0".into(),
        ));
    }
    let gp = pump_rate(params.rabi, params.excited_decay, params.laser_hwhm)?;
    Ok(symmetric_log_grid(
        g2 / 50.0,
        (10.0 * gp).max(20.0 * g2),
        per_side,
    ))
}

/// Detuning grid for an EIT spectrum: out to ±50(γ₂ + Γ′_p), where the
/// transparency line has fallen to the off-resonant level.
pub fn eit_grid(params: &ModelParams, per_side: usize) -> Result<Vec<f64>> {
    let gp = pump_rate(params.rabi, params.excited_decay, params.laser_hwhm)?;
    let hw = params.ground_coh_decay + gp;
    if !(hw > 0.0) {
        return Err(Error::InvalidParams(
            "EIT grid needs a nonzero linewidth".into(),
        ));
    }
    Ok(symmetric_log_grid(hw / 50.0, 50.0 * hw, per_side))
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|d| !d.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "detuning grid must be finite and strictly increasing".into(),
        ));
    }
    if !grid.contains(&0.0) {
        return Err(Error::GridMissingCenter);
    }
    Ok(())
}

/// Evaluates `f` on the grid. When `mirror` holds and the grid is
/// symmetric, only Δ ≥ 0 is computed and the rest is reflected.
fn sweep<E, F>(grid: &[f64], mirror: bool, exec: &E, f: F) -> Vec<Option<f64>>
where
    E: Executor,
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let n = grid.len();
    let symmetric = mirror && (0..n).all(|i| grid[i] == -grid[n - 1 - i]);
    let start = if symmetric { n / 2 } else { 0 };
    let eval = |i: usize| {
        let d = grid[start + i];
        match f(d) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("non-finite value {v} at detuning {d} rad/us; point dropped");
                None
            }
            Err(e) => {
                log::warn!("solve failed at detuning {d} rad/us: {e}");
                None
            }
        }
    };
    let half = exec.map(n - start, eval);
    if symmetric {
        (0..n)
            .map(|i| {
                half[if i >= start {
                    i - start
                } else {
                    n - 1 - i - start
                }]
            })
            .collect()
    } else {
        half
    }
}

/// g²(0) against two-photon detuning with the default variance floor.
pub fn g2_spectrum<E: Executor>(
    params: &ModelParams,
    grid: &[f64],
    exec: &E,
) -> Result<SpectrumResult> {
    g2_spectrum_with(params, grid, DEFAULT_VARIANCE_FLOOR, exec)
}

/// g²(0) against two-photon detuning. The work is halved on symmetric
/// grids when δ = 0, where g²(Δ) = g²(−Δ).
pub fn g2_spectrum_with<E: Executor>(
    params: &ModelParams,
    grid: &[f64],
    variance_floor: f64,
    exec: &E,
) -> Result<SpectrumResult> {
    params.validate()?;
    check_grid(grid)?;
    let mirror = params.one_photon_detuning == 0.0;
    let values = sweep(grid, mirror, exec, |d| {
        let state = moments::solve(&params.with_two_photon_detuning(d))?;
        value_with_floor(&state, variance_floor)
    });
    Ok(SpectrumResult::from_values(
        grid.to_vec(),
        values,
        SpectrumKind::G2,
    ))
}

fn value_with_floor(state: &MomentState, floor: f64) -> Result<f64> {
    let r = cross_correlation_with_floor(state, floor);
    r.g2_zero.ok_or(Error::DegenerateVariance {
        var1: r.var_im_coh1,
        var2: r.var_im_coh2,
        floor,
    })
}

/// Transmission proxy −(Im ρ_eg1 + Im ρ_eg2) of the phase-averaged mean.
pub fn transmission(params: &ModelParams) -> Result<f64> {
    let gen = build_first_moment_generators(params)?;
    let m = moments::solve_stationary_mean(&gen)?;
    Ok(-(m.get(Component::EG1).im + m.get(Component::EG2).im))
}

pub fn eit_spectrum<E: Executor>(
    params: &ModelParams,
    grid: &[f64],
    exec: &E,
) -> Result<SpectrumResult> {
    params.validate()?;
    check_grid(grid)?;
    let mirror = params.one_photon_detuning == 0.0;
    let values = sweep(grid, mirror, exec, |d| {
        transmission(&params.with_two_photon_detuning(d))
    });
    Ok(SpectrumResult::from_values(
        grid.to_vec(),
        values,
        SpectrumKind::Transmission,
    ))
}

/// FWHM of the transparency peak above the off-resonant level.
pub fn eit_fwhm(spec: &SpectrumResult) -> Result<f64> {
    extract_central_width_with(spec, BaselinePolicy::GridEdge).map(|w| w.fwhm)
}

/// Default number of grid points on each side of Δ = 0.
pub const DEFAULT_POINTS_PER_SIDE: usize = 160;

/// Settings shared by the trend sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Points on each side of Δ = 0 in every adaptive grid.
    pub points_per_side: usize,
    pub variance_floor: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            points_per_side: DEFAULT_POINTS_PER_SIDE,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
        }
    }
}

/// Central width against Ω on adaptive grids. The axis is Ω².
pub fn width_vs_power<E: Executor>(
    params_base: &ModelParams,
    rabi_values: &[f64],
    opts: &SweepOptions,
    exec: &E,
) -> Result<TrendCurve> {
    let mut widths = Vec::with_capacity(rabi_values.len());
    for &rabi in rabi_values {
        let p = params_base.with_rabi(rabi);
        let grid = adaptive_grid(&p, opts.points_per_side)?;
        let spec = g2_spectrum_with(&p, &grid, opts.variance_floor, exec)?;
        if let Some(e) = &spec.width_error {
            log::warn!("no central width at rabi {rabi} rad/us: {e}");
        }
        widths.push(spec.fwhm);
    }
    let mut labels = BTreeMap::new();
    labels.insert("axis".into(), "rabi_squared_rad2_per_us2".into());
    labels.insert("width".into(), "g2_central_fwhm_rad_per_us".into());
    labels.insert("laser_hwhm".into(), format!("{}", params_base.laser_hwhm));
    Ok(TrendCurve {
        axis: rabi_values.iter().map(|r| r * r).collect(),
        widths,
        labels,
    })
}

/// Largest relative width change tolerated between Ω_sat/√2 and Ω_sat.
pub const SATURATION_TOLERANCE: f64 = 0.05;

/// Saturated central width against D. Each width is checked against the
/// one at Ω_sat/√2.
pub fn saturated_width_vs_laserwidth<E: Executor>(
    params_base: &ModelParams,
    d_values: &[f64],
    rabi_saturating: f64,
    opts: &SweepOptions,
    exec: &E,
) -> Result<TrendCurve> {
    let mut widths = Vec::with_capacity(d_values.len());
    for &d in d_values {
        let p = params_base.with_laser_hwhm(d);
        let curve = width_vs_power(
            &p,
            &[rabi_saturating / core::f64::consts::SQRT_2, rabi_saturating],
            opts,
            exec,
        )?;
        let (w_low, w_sat) = match (curve.widths[0], curve.widths[1]) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::NoPeak),
        };
        let relative_change = (w_sat - w_low).abs() / w_sat;
        if relative_change > SATURATION_TOLERANCE {
            return Err(Error::NotSaturated { relative_change });
        }
        widths.push(Some(w_sat));
    }
    for (i, w) in widths.windows(2).enumerate() {
        if let [Some(a), Some(b)] = w {
            if b < a {
                log::warn!(
                    "saturated width decreases from D = {} to D = {}",
                    d_values[i],
                    d_values[i + 1]
                );
            }
        }
    }
    let mut labels = BTreeMap::new();
    labels.insert("axis".into(), "laser_hwhm_rad_per_us".into());
    labels.insert("width".into(), "g2_central_fwhm_rad_per_us".into());
    labels.insert("rabi_saturating".into(), format!("{rabi_saturating}"));
    labels.insert(
        "saturation_check".into(),
        format!("width at rabi/sqrt(2) within {SATURATION_TOLERANCE} relative"),
    );
    Ok(TrendCurve {
        axis: d_values.to_vec(),
        widths,
        labels,
    })
}

/// Vandermonde condition above which a zero-power fit is rejected.
pub const FIT_CONDITION_LIMIT: f64 = 1e10;

/// Intercept of a least-squares polynomial in power.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroPowerFit {
    pub intercept: f64,
    pub fit: PolyFit,
}

pub fn extrapolate_zero_power(
    powers: &[f64],
    widths: &[f64],
    degree: usize,
) -> Result<ZeroPowerFit> {
    if powers.len() != widths.len() {
        return Err(Error::InvalidParams(format!(
            "{} powers but {} widths",
            powers.len(),
            widths.len()
        )));
    }
    if powers.len() < degree + 2 {
        return Err(Error::InvalidParams(format!(
            "a degree-{degree} fit needs at least {} points, got {}",
            degree + 2,
            powers.len()
        )));
    }
    if powers.iter().chain(widths).any(|v| !v.is_finite()) || powers.iter().any(|p| *p < 0.0) {
        return Err(Error::InvalidParams(
            "powers must be finite and nonnegative, widths finite".into(),
        ));
    }
    let fit = polyfit(powers, widths, degree);
    if !(fit.condition <= FIT_CONDITION_LIMIT) {
        return Err(Error::IllConditionedFit {
            condition: fit.condition,
        });
    }
    Ok(ZeroPowerFit {
        intercept: fit.coefficients[0],
        fit,
    })
}

/// Velocity classes sampled uniformly over ±`span_sigmas` thermal widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityGrid {
    pub classes: usize,
    /// Standard deviation of the one-photon Doppler shift k·v, rad/μs.
    pub sigma: f64,
    pub span_sigmas: f64,
}

impl VelocityGrid {
    pub fn new(classes: usize, sigma: f64) -> Self {
        VelocityGrid {
            classes,
            sigma,
            span_sigmas: 3.0,
        }
    }

    /// Doppler shifts and normalised Maxwell–Boltzmann weights.
    pub fn nodes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.classes == 0 || !(self.sigma >= 0.0) || !(self.span_sigmas > 0.0) {
            return Err(Error::InvalidParams(
                "velocity grid needs classes >= 1, sigma >= 0 and span > 0".into(),
            ));
        }
        if self.classes == 1 || self.sigma == 0.0 {
            return Ok((alloc::vec![0.0], alloc::vec![1.0]));
        }
        let span = self.span_sigmas * self.sigma;
        let step = 2.0 * span / (self.classes - 1) as f64;
        let shifts: Vec<f64> = (0..self.classes).map(|i| -span + step * i as f64).collect();
        let raw: Vec<f64> = shifts
            .iter()
            .map(|s| (-0.5 * (s / self.sigma).powi(2)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        Ok((shifts, raw.iter().map(|w| w / total).collect()))
    }
}

/// Standard deviation of k·v for atoms of `mass_amu` at `temperature_k`
/// probed at `wavelength_nm`, in rad/μs.
pub fn thermal_doppler_sigma(wavelength_nm: f64, mass_amu: f64, temperature_k: f64) -> f64 {
    const BOLTZMANN: f64 = 1.380_649e-23;
    const AMU: f64 = 1.660_539_066_60e-27;
    let v = (BOLTZMANN * temperature_k / (mass_amu * AMU)).sqrt();
    let k = core::f64::consts::TAU / (wavelength_nm * 1e-9);
    k * v * 1e-6
}

/// Mixture of velocity classes, each solved with its one-photon detuning
/// shifted by k·v. Classes are independent emitters in an optically thin
/// sample, so their means and covariances add with the thermal weights;
/// correlations between classes are neglected.
pub fn doppler_average<E: Executor>(
    params_base: &ModelParams,
    grid: &VelocityGrid,
    exec: &E,
) -> Result<MomentState> {
    let (shifts, weights) = grid.nodes()?;
    let states: Vec<Result<MomentState>> = exec.map(shifts.len(), |i| {
        let p = params_base.with_one_photon_detuning(params_base.one_photon_detuning + shifts[i]);
        let gen = build_generators(&p)?;
        let mean = moments::solve_stationary_mean(&gen)?;
        moments::solve_stationary_covariance(&gen, &mean)
    });
    let states = states.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(MomentState::weighted_sum(&states, &weights))
}

/// g²(0) spectrum of the Doppler-averaged medium.
pub fn doppler_g2_spectrum<E: Executor>(
    params_base: &ModelParams,
    velocity: &VelocityGrid,
    grid: &[f64],
    variance_floor: f64,
    exec: &E,
) -> Result<SpectrumResult> {
    params_base.validate()?;
    check_grid(grid)?;
    velocity.nodes()?;
    // the thermal distribution is symmetric, so the mixture keeps Δ → −Δ
    let mirror = params_base.one_photon_detuning == 0.0;
    let values = sweep(grid, mirror, &crate::exec::Serial, |d| {
        let state = doppler_average(&params_base.with_two_photon_detuning(d), velocity, exec)?;
        value_with_floor(&state, variance_floor)
    });
    Ok(SpectrumResult::from_values(
        grid.to_vec(),
        values,
        SpectrumKind::G2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::units::mhz;
    use alloc::vec;

    fn sampled(grid: &[f64], f: impl Fn(f64) -> f64) -> SpectrumResult {
        SpectrumResult::from_values(
            grid.to_vec(),
            grid.iter().map(|&d| Some(f(d))).collect(),
            SpectrumKind::G2,
        )
    }

    fn linear_grid(half: f64, n_side: usize) -> Vec<f64> {
        (-(n_side as i64)..=n_side as i64)
            .map(|i| half * i as f64 / n_side as f64)
            .collect()
    }

    #[test]
    fn lorentzian_width() {
        let w = 1.3;
        let s = sampled(&linear_grid(20.0, 100), |d| {
            2.0 + 1.0 / (1.0 + (d / w).powi(2))
        });
        let fwhm = s.fwhm.unwrap();
        assert!((fwhm / (2.0 * w) - 1.0).abs() < 0.005, "fwhm {fwhm}");
        assert_eq!(s.baseline_source, Some(BaselineSource::GridEdge));
    }

    #[test]
    fn gaussian_width() {
        let sigma = 0.7;
        let s = sampled(&linear_grid(5.0, 100), |d| {
            0.5 + (-d * d / (2.0 * sigma * sigma)).exp()
        });
        let want = 2.0 * sigma * (2.0 * 2f64.ln()).sqrt();
        assert!((s.fwhm.unwrap() / want - 1.0).abs() < 0.005);
    }

    fn composite(d: f64) -> f64 {
        (-d * d / (2.0 * 0.3 * 0.3)).exp() - 1.5 / (1.0 + (d / 2.0).powi(2))
    }

    #[test]
    fn peak_on_dip_matches_fine_root_search() {
        let s = sampled(&linear_grid(20.0, 100), composite);
        let w = extract_central_width(&s).unwrap();
        assert_eq!(w.baseline_source, BaselineSource::WingMinima);
        // independent reference: 10⁴-point scan for the minima and the crossing
        let fine: Vec<f64> = (0..=10_000).map(|i| i as f64 * 20.0 / 10_000.0).collect();
        let vals: Vec<f64> = fine.iter().map(|&d| composite(d)).collect();
        let imin = (1..vals.len() - 1)
            .find(|&i| vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1])
            .unwrap();
        let level = 0.5 * (composite(0.0) + vals[imin]);
        let ic = (0..imin)
            .find(|&i| vals[i] >= level && vals[i + 1] < level)
            .unwrap();
        let t = (vals[ic] - level) / (vals[ic] - vals[ic + 1]);
        let reference = 2.0 * (fine[ic] + t * (fine[ic + 1] - fine[ic]));
        assert!(
            (w.fwhm / reference - 1.0).abs() < 0.01,
            "{} vs {reference}",
            w.fwhm
        );
    }

    #[test]
    fn width_is_affine_invariant() {
        let grid = linear_grid(20.0, 100);
        let base = sampled(&grid, composite).fwhm.unwrap();
        for (a, c) in [(3.0, -7.0), (0.25, 4.0), (1e4, 0.5), (1e-3, 1e-3)] {
            let w = sampled(&grid, |d| a * composite(d) + c).fwhm.unwrap();
            assert!(
                (w / base - 1.0).abs() < 1e-12,
                "a={a}, c={c}: {}",
                w / base - 1.0
            );
        }
    }

    #[test]
    fn extraction_errors() {
        let grid = linear_grid(1.0, 10);
        assert!(matches!(
            extract_central_width(&sampled(&grid, |d| d * d)),
            Err(Error::NoPeak)
        ));
        // the half level is never reached inside the grid
        let narrow = linear_grid(0.1, 10);
        assert!(matches!(
            extract_central_width(&sampled(&narrow, |d| 1.0 / (1.0 + d * d))),
            Err(Error::UnbracketedCrossing)
        ));
        let off: Vec<f64> = vec![1.0, 2.0, 3.0];
        assert!(matches!(
            extract_central_width(&sampled(&off, |d| d)),
            Err(Error::GridMissingCenter)
        ));
    }

    #[test]
    fn pump_rate_values() {
        assert!((pump_rate(2.0, 2.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let g = 3.0;
        let d = 0.5;
        let om = (2.0 * (g + 2.0 * d)).sqrt();
        assert!((pump_rate(om, g, d).unwrap() - 1.0).abs() < 1e-14);
        let r = pump_rate(mhz(1.0), mhz(500.0), mhz(1.0)).unwrap();
        assert!((r - 6.259e-3).abs() < 1e-6, "{r}");
        assert!(pump_rate(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn zero_power_fit() {
        let p = [0.0, 1.0, 2.0, 3.0, 5.0, 8.0];
        let w: Vec<f64> = p.iter().map(|x| 75.0 + 3.0 * x).collect();
        let fit = extrapolate_zero_power(&p, &w, 2).unwrap();
        assert!((fit.intercept - 75.0).abs() < 1e-10);
        assert!(extrapolate_zero_power(&p[..3], &w[..3], 2).is_err());
        let dup = extrapolate_zero_power(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        assert!(dup.intercept.is_finite());
    }

    #[test]
    fn velocity_weights() {
        let (s, w) = VelocityGrid::new(21, 5.0).nodes().unwrap();
        assert_eq!(s.len(), 21);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s[0] + 15.0).abs() < 1e-12 && (s[20] - 15.0).abs() < 1e-12);
        let (s, w) = VelocityGrid::new(1, 5.0).nodes().unwrap();
        assert_eq!((s, w), (vec![0.0], vec![1.0]));
    }

    #[test]
    fn thermal_width_of_rubidium() {
        // Rb-87 D1 line at 52 °C: σ ≈ 2π × 222 MHz
        let s = thermal_doppler_sigma(795.0, 86.909, 325.15);
        assert!((s / mhz(222.0) - 1.0).abs() < 0.01, "{}", s / mhz(1.0));
    }

    #[test]
    fn zero_temperature_average_is_direct_solve() {
        let p = ModelParams::phenomenological(mhz(2.0), mhz(1.0)).with_two_photon_detuning(0.3);
        let avg = doppler_average(&p, &VelocityGrid::new(1, 0.0), &Serial).unwrap();
        let direct = moments::solve(&p).unwrap();
        assert!((&avg.covariance - &direct.covariance).norm() <= 1e-15 * direct.covariance.norm());
    }

    #[test]
    fn grid_must_contain_center() {
        let p = ModelParams::phenomenological(mhz(2.0), mhz(1.0));
        assert!(matches!(
            g2_spectrum(&p, &[-1.0, 1.0], &Serial),
            Err(Error::GridMissingCenter)
        ));
    }

    #[test]
    fn mirrored_sweep_equals_full_sweep() {
        let p = ModelParams::phenomenological(mhz(5.0), mhz(1.0));
        let grid = adaptive_grid(&p, 20).unwrap();
        let half = g2_spectrum(&p, &grid, &Serial).unwrap();
        let full = g2_spectrum(&p.with_one_photon_detuning(1e-300), &grid, &Serial).unwrap();
        for (a, b) in half.values.iter().zip(&full.values) {
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn flat_transmission_has_no_peak() {
        let p = ModelParams::phenomenological(0.0, 0.0);
        let grid = symmetric_log_grid(0.01, 10.0, 20);
        let s = eit_spectrum(&p, &grid, &Serial).unwrap();
        assert!(matches!(eit_fwhm(&s), Err(Error::NoPeak)));
    }
}
