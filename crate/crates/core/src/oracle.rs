//! Monte-Carlo integration of the stochastic Bloch equation with an explicit
//! Wiener laser phase, used as ground truth for the moment solver and as a
//! source of synthetic detector records.
//!
//! Seeding: trajectory `k` draws its phase increments from ChaCha12 stream
//! `3k`, its detector noise from stream `3k + 1` and any Brownian-bridge
//! refinement from stream `3k + 2`, all keyed by the master seed. The bootstrap uses stream `u64::MAX`. Results are reduced in
//! trajectory order, so they do not depend on the executor.

use alloc::format;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, Serial};
use crate::linalg::{czero, expm, CMatrix};
use crate::model::{
    build_first_moment_generators, Component, DensityVector, GeneratorSet, ModelParams,
};
use crate::moments::{CorrelationResult, DEFAULT_VARIANCE_FLOOR};
use crate::stats::{self, PairMoments};
use crate::trace::{block_ranges, TraceSet};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Strang splitting: exact half-step phase rotations around an exact
    /// step of the deterministic affine drift.
    ExponentialEuler,
    /// Itô Euler–Maruyama on the phase-averaged drift.
    EulerMaruyama,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Integration step, μs.
    pub time_step: f64,
    /// Length of every trajectory including burn-in, μs.
    pub total_time: f64,
    /// Discarded initial transient, μs.
    pub burn_in: f64,
    pub trajectories: usize,
    pub seed: u64,
    /// RMS of independent white noise added to each channel.
    pub additive_noise_rms: f64,
    pub integrator: Integrator,
    /// Keep every n-th step after burn-in.
    pub sample_every: usize,
    /// Contiguous bootstrap blocks per trajectory.
    pub blocks_per_trajectory: usize,
    pub bootstrap_resamples: usize,
    /// Draws the Wiener path at step `time_step · 2^phase_refinement` and
    /// fills in the intermediate points by Brownian bridges, so runs that
    /// differ only in step size can share one path.
    pub phase_refinement: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            time_step: 1e-3,
            total_time: 1000.0,
            burn_in: 100.0,
            trajectories: 16,
            seed: 0,
            additive_noise_rms: 0.0,
            integrator: Integrator::ExponentialEuler,
            sample_every: 1,
            blocks_per_trajectory: 20,
            bootstrap_resamples: 200,
            phase_refinement: 0,
        }
    }
}

impl OracleConfig {
    pub fn total_steps(&self) -> u64 {
        (self.total_time / self.time_step).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.time_step).round() as u64
    }

    /// Samples retained per trajectory.
    pub fn retained_samples(&self) -> usize {
        let kept = self.total_steps().saturating_sub(self.burn_in_steps());
        (kept / self.sample_every.max(1) as u64) as usize
    }

    /// Checks the step-size bound dt·max(Γ, |δ|+|Δ|, Ω, D) < 0.05 and that
    /// the burn-in spans five of the slowest decay times.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        params.validate()?;
        let bad = |msg: alloc::string::String| Err(Error::InvalidParams(msg));
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return bad(format!(
                "time_step must be positive, got {}",
                self.time_step
            ));
        }
        if !(self.burn_in >= 0.0 && self.total_time > self.burn_in) {
            return bad(format!(
                "total_time ({}) must exceed burn_in ({})",
                self.total_time, self.burn_in
            ));
        }
        if self.trajectories == 0 || self.sample_every == 0 || self.blocks_per_trajectory == 0 {
            return bad("trajectories, sample_every and blocks_per_trajectory must be >= 1".into());
        }
        if !(self.additive_noise_rms >= 0.0 && self.additive_noise_rms.is_finite()) {
            return bad(format!(
                "additive_noise_rms must be >= 0, got {}",
                self.additive_noise_rms
            ));
        }
        let fastest = params
            .excited_decay
            .max(params.one_photon_detuning.abs() + params.two_photon_detuning.abs())
            .max(params.rabi)
            .max(params.laser_hwhm);
        let product = self.time_step * fastest;
        if !(product < 0.05) {
            return bad(format!(
                "time_step * fastest rate = {product:.4} violates the stability bound 0.05"
            ));
        }
        let slowest = [
            params.excited_decay,
            params.ground_pop_decay,
            params.ground_coh_decay,
        ]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
        let needed = 5.0 / slowest;
        if self.burn_in < needed {
            return bad(format!(
                "burn_in {} us is shorter than 5 / slowest decay = {needed:.3} us",
                self.burn_in
            ));
        }
        if self.retained_samples() < self.blocks_per_trajectory {
            return bad(format!(
                "{} retained samples cannot fill {} blocks",
                self.retained_samples(),
                self.blocks_per_trajectory
            ));
        }
        Ok(())
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian phase increments of variance 2D·dt for one trajectory.
struct PhaseNoise {
    rng: ChaCha12Rng,
    bridge: ChaCha12Rng,
    /// Standard deviation of one coarse increment.
    coarse_std: f64,
    refinement: u32,
    /// Pending fine increments, last one first.
    pending: Vec<f64>,
}

impl PhaseNoise {
    fn new(laser_hwhm: f64, cfg: &OracleConfig, trajectory: usize) -> Self {
        let coarse_dt = cfg.time_step * (1u64 << cfg.phase_refinement) as f64;
        PhaseNoise {
            rng: stream_rng(cfg.seed, 3 * trajectory as u64),
            bridge: stream_rng(cfg.seed, 3 * trajectory as u64 + 2),
            coarse_std: (2.0 * laser_hwhm * coarse_dt).sqrt(),
            refinement: cfg.phase_refinement,
            pending: Vec::new(),
        }
    }

    fn next(&mut self) -> f64 {
        if self.coarse_std == 0.0 {
            return 0.0;
        }
        if self.refinement == 0 {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            return self.coarse_std * z;
        }
        if let Some(x) = self.pending.pop() {
            return x;
        }
        // bisect the coarse increment: each half is the midpoint of a
        // Brownian bridge plus an independent deviation
        let first: f64 = StandardNormal.sample(&mut self.rng);
        let mut pieces = alloc::vec![self.coarse_std * first];
        let mut var = self.coarse_std * self.coarse_std;
        for _ in 0..self.refinement {
            let dev = 0.5 * var.sqrt();
            let mut next = Vec::with_capacity(2 * pieces.len());
            for w in pieces {
                let z: f64 = StandardNormal.sample(&mut self.bridge);
                let a = 0.5 * w + dev * z;
                next.push(a);
                next.push(w - a);
            }
            pieces = next;
            var *= 0.5;
        }
        pieces.reverse();
        self.pending = pieces;
        self.pending.pop().unwrap_or(0.0)
    }
}

/// All phase increments of `trajectory`, burn-in included.
pub fn simulate_phase_path(laser_hwhm: f64, cfg: &OracleConfig, trajectory: usize) -> Vec<f64> {
    let mut noise = PhaseNoise::new(laser_hwhm, cfg, trajectory);
    (0..cfg.total_steps()).map(|_| noise.next()).collect()
}

type State = [Complex64; 8];

/// One step of the chosen scheme, with every matrix precomputed.
struct Stepper {
    integrator: Integrator,
    /// Affine map u ↦ P u + q over one step.
    p: [[Complex64; 8]; 8],
    q: State,
    winding: [f64; 8],
}

impl Stepper {
    fn new(gen: &GeneratorSet, cfg: &OracleConfig) -> Self {
        let dt = cfg.time_step;
        let mut p = [[czero(); 8]; 8];
        let mut q = [czero(); 8];
        match cfg.integrator {
            Integrator::ExponentialEuler => {
                // exp([[A dt, b dt], [0, 0]]) = [[e^{A dt}, φ(A dt) b dt], [0, 1]]
                let mut aug = CMatrix::zeros(9, 9);
                for j in 0..8 {
                    for k in 0..8 {
                        aug[(j, k)] = gen.drift[(j, k)] * dt;
                    }
                    aug[(j, 8)] = gen.source[j] * dt;
                }
                let e = expm(&aug);
                for j in 0..8 {
                    for k in 0..8 {
                        p[j][k] = e[(j, k)];
                    }
                    q[j] = e[(j, 8)];
                }
            }
            Integrator::EulerMaruyama => {
                let a = gen.averaged_drift();
                for j in 0..8 {
                    for k in 0..8 {
                        p[j][k] = a[(j, k)] * dt;
                    }
                    p[j][j] += Complex64::new(1.0, 0.0);
                    q[j] = gen.source[j] * dt;
                }
            }
        }
        Stepper {
            integrator: cfg.integrator,
            p,
            q,
            winding: gen.noise_coupling,
        }
    }

    fn affine(&self, u: &State) -> State {
        let mut out = self.q;
        for (o, row) in out.iter_mut().zip(&self.p) {
            for (pk, uk) in row.iter().zip(u) {
                *o += pk * uk;
            }
        }
        out
    }

    fn rotate(&self, u: &mut State, angle: f64) {
        if angle == 0.0 {
            return;
        }
        let r = Complex64::new(angle.cos(), -angle.sin());
        for (x, n) in u.iter_mut().zip(&self.winding) {
            if *n > 0.0 {
                *x *= r;
            } else if *n < 0.0 {
                *x *= r.conj();
            }
        }
    }

    fn step(&self, u: &mut State, dphi: f64) {
        match self.integrator {
            Integrator::ExponentialEuler => {
                self.rotate(u, dphi / 2.0);
                *u = self.affine(u);
                self.rotate(u, dphi / 2.0);
            }
            Integrator::EulerMaruyama => {
                let mut next = self.affine(u);
                for ((x, old), n) in next.iter_mut().zip(u.iter()).zip(&self.winding) {
                    *x += Complex64::new(0.0, -n * dphi) * old;
                }
                *u = next;
            }
        }
    }
}

/// Running mean and non-conjugated comoments of the state vector.
#[derive(Debug, Clone)]
struct StateMoments {
    count: u64,
    mean: State,
    m2: [[Complex64; 8]; 8],
}

impl StateMoments {
    fn new() -> Self {
        StateMoments {
            count: 0,
            mean: [czero(); 8],
            m2: [[czero(); 8]; 8],
        }
    }

    fn push(&mut self, u: &State) {
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        let mut delta = [czero(); 8];
        for j in 0..8 {
            delta[j] = u[j] - self.mean[j];
            self.mean[j] += delta[j] * inv;
        }
        for j in 0..8 {
            for k in 0..8 {
                self.m2[j][k] += delta[j] * (u[k] - self.mean[k]);
            }
        }
    }

    fn merge(&self, other: &StateMoments) -> StateMoments {
        if self.count == 0 {
            return other.clone();
        }
        if other.count == 0 {
            return self.clone();
        }
        let n = self.count + other.count;
        let (na, nb) = (self.count as f64, other.count as f64);
        let mut out = StateMoments::new();
        out.count = n;
        let mut delta = [czero(); 8];
        for j in 0..8 {
            delta[j] = other.mean[j] - self.mean[j];
            out.mean[j] = self.mean[j] + delta[j] * (nb / n as f64);
        }
        let w = na * nb / n as f64;
        for j in 0..8 {
            for k in 0..8 {
                out.m2[j][k] = self.m2[j][k] + other.m2[j][k] + delta[j] * delta[k] * w;
            }
        }
        out
    }

    fn covariance(&self) -> CMatrix {
        let n = self.count.max(1) as f64;
        CMatrix::from_fn(8, 8, |j, k| self.m2[j][k] / n)
    }
}

/// Statistics of one trajectory, kept per block.
struct TrajectoryRun {
    channel_blocks: Vec<PairMoments>,
    state_blocks: Vec<StateMoments>,
    population_range: (f64, f64),
    channels: Option<(Vec<f64>, Vec<f64>)>,
}

fn run_trajectory(
    stepper: &Stepper,
    params: &ModelParams,
    cfg: &OracleConfig,
    trajectory: usize,
    record: bool,
) -> Result<TrajectoryRun> {
    let mut phase = PhaseNoise::new(params.laser_hwhm, cfg, trajectory);
    let mut detector = stream_rng(cfg.seed, 3 * trajectory as u64 + 1);
    let mut u = DensityVector::ground_mixture().0;

    let total = cfg.total_steps();
    let burn = cfg.burn_in_steps();
    let every = cfg.sample_every as u64;
    let retained = cfg.retained_samples();
    let ranges: Vec<(usize, usize)> = block_ranges(retained, cfg.blocks_per_trajectory).collect();

    let mut channel_blocks = Vec::with_capacity(ranges.len());
    let mut state_blocks = Vec::with_capacity(ranges.len());
    let mut pair = PairMoments::default();
    let mut state = StateMoments::new();
    let mut block = 0;
    let mut sample = 0usize;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut channels = record.then(|| (Vec::with_capacity(retained), Vec::with_capacity(retained)));

    let (i1, i2) = (Component::EG1.index(), Component::EG2.index());
    for step in 1..=total {
        stepper.step(&mut u, phase.next());
        if u.iter().any(|x| !(x.norm_sqr() <= 100.0)) {
            return Err(Error::UnstableIntegration { trajectory, step });
        }
        if step <= burn || !(step - burn).is_multiple_of(every) || sample >= retained {
            continue;
        }
        let (mut c1, mut c2) = (u[i1].im, u[i2].im);
        if cfg.additive_noise_rms > 0.0 {
            let z1: f64 = StandardNormal.sample(&mut detector);
            let z2: f64 = StandardNormal.sample(&mut detector);
            c1 += cfg.additive_noise_rms * z1;
            c2 += cfg.additive_noise_rms * z2;
        }
        pair.push(c1, c2);
        state.push(&u);
        for p in [u[0].re, u[1].re] {
            range = (range.0.min(p), range.1.max(p));
        }
        if let Some((a, b)) = channels.as_mut() {
            a.push(c1);
            b.push(c2);
        }
        sample += 1;
        if sample == ranges[block].1 {
            channel_blocks.push(core::mem::take(&mut pair));
            state_blocks.push(core::mem::replace(&mut state, StateMoments::new()));
            block += 1;
        }
    }
    Ok(TrajectoryRun {
        channel_blocks,
        state_blocks,
        population_range: range,
        channels,
    })
}

/// Time-and-ensemble statistics of a Monte-Carlo run.
#[derive(Debug, Clone)]
pub struct TrajectoryStats {
    /// Pooled Pearson coefficient of the two channels; NaN when degenerate.
    pub g2_zero: f64,
    /// Block-bootstrap standard error of `g2_zero`.
    pub std_error: f64,
    pub correlation: CorrelationResult,
    pub mean_state: DensityVector,
    /// Pooled covariance ⟨u_j u_k⟩ − ⟨u_j⟩⟨u_k⟩ (no conjugation).
    pub covariance: CMatrix,
    /// Standard error of every covariance entry from the spread of block
    /// covariances, real and imaginary parts separately.
    pub covariance_std_error: CMatrix,
    /// Smallest and largest sampled ground population.
    pub population_range: (f64, f64),
    /// Per-block channel moments in trajectory order.
    pub blocks: Vec<PairMoments>,
    pub samples: u64,
}

fn reduce(runs: &[TrajectoryRun], cfg: &OracleConfig) -> TrajectoryStats {
    let blocks: Vec<PairMoments> = runs
        .iter()
        .flat_map(|r| r.channel_blocks.iter().copied())
        .collect();
    let state_blocks: Vec<&StateMoments> =
        runs.iter().flat_map(|r| r.state_blocks.iter()).collect();
    let pooled = stats::pool(&blocks);
    let correlation = CorrelationResult::from_moments(
        pooled.var_x(),
        pooled.var_y(),
        pooled.covariance(),
        DEFAULT_VARIANCE_FLOOR,
    );
    let g2_zero = correlation.g2_zero.unwrap_or(f64::NAN);
    let std_error = if correlation.degenerate {
        f64::NAN
    } else {
        let mut rng = stream_rng(cfg.seed, u64::MAX);
        stats::std_dev(&stats::bootstrap_pearson(
            &blocks,
            cfg.bootstrap_resamples,
            &mut rng,
        ))
    };

    let state = state_blocks
        .iter()
        .fold(StateMoments::new(), |acc, b| acc.merge(b));
    let block_covs: Vec<CMatrix> = state_blocks.iter().map(|b| b.covariance()).collect();
    let nb = block_covs.len() as f64;
    let covariance_std_error = CMatrix::from_fn(8, 8, |j, k| {
        let re: Vec<f64> = block_covs.iter().map(|c| c[(j, k)].re).collect();
        let im: Vec<f64> = block_covs.iter().map(|c| c[(j, k)].im).collect();
        Complex64::new(stats::std_dev(&re), stats::std_dev(&im)) / nb.sqrt()
    });
    let population_range = runs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |r, t| {
            (r.0.min(t.population_range.0), r.1.max(t.population_range.1))
        });

    TrajectoryStats {
        g2_zero,
        std_error,
        correlation,
        mean_state: DensityVector(state.mean),
        covariance: state.covariance(),
        covariance_std_error,
        population_range,
        blocks,
        samples: pooled.count,
    }
}

fn run_all<E: Executor>(
    params: &ModelParams,
    cfg: &OracleConfig,
    exec: &E,
    record: bool,
) -> Result<Vec<TrajectoryRun>> {
    cfg.validate(params)?;
    let gen = build_first_moment_generators(params)?;
    let stepper = Stepper::new(&gen, cfg);
    exec.map(cfg.trajectories, |k| {
        run_trajectory(&stepper, params, cfg, k, record)
    })
    .into_iter()
    .collect()
}

/// Integrates `cfg.trajectories` independent trajectories serially.
pub fn integrate_trajectory(params: &ModelParams, cfg: &OracleConfig) -> Result<TrajectoryStats> {
    integrate_trajectory_with(params, cfg, &Serial)
}

pub fn integrate_trajectory_with<E: Executor>(
    params: &ModelParams,
    cfg: &OracleConfig,
    exec: &E,
) -> Result<TrajectoryStats> {
    let runs = run_all(params, cfg, exec, false)?;
    Ok(reduce(&runs, cfg))
}

/// Runs the oracle and returns the retained channel samples of all
/// trajectories concatenated in order, together with the statistics of the
/// same samples.
pub fn emit_synthetic_traces<E: Executor>(
    params: &ModelParams,
    cfg: &OracleConfig,
    exec: &E,
) -> Result<(TraceSet, TrajectoryStats)> {
    if cfg.time_step > 0.0 && cfg.retained_samples() == 0 {
        return Err(Error::EmptyTrace);
    }
    let runs = run_all(params, cfg, exec, true)?;
    let stats = reduce(&runs, cfg);
    let mut ch1 = Vec::new();
    let mut ch2 = Vec::new();
    for r in &runs {
        if let Some((a, b)) = &r.channels {
            ch1.extend_from_slice(a);
            ch2.extend_from_slice(b);
        }
    }
    let mut trace = TraceSet::new(
        cfg.time_step * cfg.sample_every as f64,
        ch1,
        ch2,
        params.two_photon_detuning,
    )?;
    trace
        .metadata
        .insert("seed".into(), format!("{}", cfg.seed));
    trace
        .metadata
        .insert("trajectories".into(), format!("{}", cfg.trajectories));
    trace.metadata.insert(
        "samples_per_trajectory".into(),
        format!("{}", cfg.retained_samples()),
    );
    Ok((trace, stats))
}
