//! Offline analysis of two-channel intensity records: ac-coupling, zero-lag
//! cross-correlation with block-bootstrap errors, and assembly of g²(0)
//! spectra across detuning-labelled records.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;

use crate::error::{Error, Result};
use crate::moments::{CorrelationResult, DEFAULT_VARIANCE_FLOOR};
use crate::spectro::{SpectrumKind, SpectrumResult};
use crate::stats::{self, PairMoments};

/// Two sampled intensity channels at one two-photon detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    /// Sampling interval in μs.
    pub time_step: f64,
    pub channel1: Vec<f64>,
    pub channel2: Vec<f64>,
    /// Two-photon detuning of the record, rad/μs.
    pub delta_label: f64,
    pub metadata: BTreeMap<String, String>,
}

impl TraceSet {
    pub fn new(
        time_step: f64,
        channel1: Vec<f64>,
        channel2: Vec<f64>,
        delta_label: f64,
    ) -> Result<Self> {
        let t = TraceSet {
            time_step,
            channel1,
            channel2,
            delta_label,
            metadata: BTreeMap::new(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channel1.is_empty() && self.channel2.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if self.channel1.len() != self.channel2.len() {
            return Err(Error::MalformedTrace(format!(
                "channel lengths differ ({} vs {})",
                self.channel1.len(),
                self.channel2.len()
            )));
        }
        if self.channel1.len() < 2 {
            return Err(Error::MalformedTrace("fewer than two samples".into()));
        }
        if !(self.time_step > 0.0 && self.time_step.is_finite()) {
            return Err(Error::MalformedTrace(format!(
                "time step must be positive, got {}",
                self.time_step
            )));
        }
        if !self.delta_label.is_finite() {
            return Err(Error::MalformedTrace("detuning label is not finite".into()));
        }
        if let Some(i) = self
            .channel1
            .iter()
            .zip(&self.channel2)
            .position(|(a, b)| !a.is_finite() || !b.is_finite())
        {
            return Err(Error::MalformedTrace(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.channel1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channel1.is_empty()
    }

    fn with_channels(&self, channel1: Vec<f64>, channel2: Vec<f64>) -> TraceSet {
        TraceSet {
            time_step: self.time_step,
            channel1,
            channel2,
            delta_label: self.delta_label,
            metadata: self.metadata.clone(),
        }
    }
}

/// Baseline removed by [`detrend`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetrendWindow {
    /// Subtract the mean of the whole record.
    Global,
    /// Subtract a centred moving average of this width in μs. Near the ends
    /// the window shrinks symmetrically so a linear drift is removed exactly.
    Moving(f64),
}

fn remove_global_mean(x: &[f64]) -> Vec<f64> {
    let m = stats::mean(x);
    let shifted: Vec<f64> = x.iter().map(|v| v - m).collect();
    // second pass removes the rounding left by the first
    let r = stats::mean(&shifted);
    shifted.into_iter().map(|v| v - r).collect()
}

fn remove_moving_mean(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let m = stats::mean(x);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v - m;
        prefix.push(acc);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let sum = prefix[i + h + 1] - prefix[i - h];
            (x[i] - m) - sum / (2 * h + 1) as f64
        })
        .collect()
}

pub fn detrend(trace: &TraceSet, window: DetrendWindow) -> Result<TraceSet> {
    trace.validate()?;
    match window {
        DetrendWindow::Global => Ok(trace.with_channels(
            remove_global_mean(&trace.channel1),
            remove_global_mean(&trace.channel2),
        )),
        DetrendWindow::Moving(w) => {
            let min = 10.0 * trace.time_step;
            if !(w >= min) {
                return Err(Error::WindowTooShort { window: w, min });
            }
            let half = ((w / trace.time_step) / 2.0).floor() as usize;
            Ok(trace.with_channels(
                remove_moving_mean(&trace.channel1, half),
                remove_moving_mean(&trace.channel2, half),
            ))
        }
    }
}

/// Settings of the trace pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyzerOptions {
    /// Contiguous blocks used by the bootstrap.
    pub blocks: usize,
    pub resamples: usize,
    pub seed: u64,
    pub variance_floor: f64,
    /// Applied by [`assemble_spectrum`] before correlating.
    pub detrend: DetrendWindow,
}

impl Default for AnalyzerOptions {
    fn default() -> Self {
        AnalyzerOptions {
            blocks: 50,
            resamples: 200,
            seed: 0,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            detrend: DetrendWindow::Global,
        }
    }
}

/// Zero-lag correlation of one record.
#[derive(Debug, Clone)]
pub struct TraceCorrelation {
    pub correlation: CorrelationResult,
    pub std_error: f64,
    /// Per-block moments, kept for downstream bootstraps.
    pub blocks: Vec<PairMoments>,
}

impl TraceCorrelation {
    pub fn g2(&self) -> f64 {
        self.correlation.g2_zero.unwrap_or(f64::NAN)
    }
}

/// Splits `len` samples into `blocks` contiguous ranges of near-equal size.
pub fn block_ranges(len: usize, blocks: usize) -> impl Iterator<Item = (usize, usize)> {
    let blocks = blocks.clamp(1, len.max(1));
    (0..blocks).map(move |b| (b * len / blocks, (b + 1) * len / blocks))
}

/// Pearson zero-lag coefficient of an ac-coupled record with a contiguous
/// block-bootstrap standard error.
pub fn g2_zero_lag(trace: &TraceSet, opts: &AnalyzerOptions) -> Result<TraceCorrelation> {
    trace.validate()?;
    let n = trace.len() as f64;
    for (k, ch) in [(1u8, &trace.channel1), (2u8, &trace.channel2)] {
        let mean = ch.iter().sum::<f64>() / n;
        let rms = (ch.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if rms == 0.0 {
            return Err(Error::DegenerateVariance {
                var1: 0.0,
                var2: 0.0,
                floor: opts.variance_floor,
            });
        }
        if mean.abs() >= 1e-6 * rms {
            return Err(Error::NotDetrended {
                channel: k,
                ratio: mean.abs() / rms,
            });
        }
    }
    let blocks: Vec<PairMoments> = block_ranges(trace.len(), opts.blocks)
        .map(|(a, b)| {
            let mut m = PairMoments::default();
            for i in a..b {
                m.push(trace.channel1[i], trace.channel2[i]);
            }
            m
        })
        .collect();
    let pooled = stats::pool(&blocks);
    let correlation = CorrelationResult::from_moments(
        pooled.var_x(),
        pooled.var_y(),
        pooled.covariance(),
        opts.variance_floor,
    );
    if correlation.degenerate {
        return Err(Error::DegenerateVariance {
            var1: correlation.var_im_coh1,
            var2: correlation.var_im_coh2,
            floor: opts.variance_floor,
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let replicates = stats::bootstrap_pearson(&blocks, opts.resamples, &mut rng);
    Ok(TraceCorrelation {
        correlation,
        std_error: stats::std_dev(&replicates),
        blocks,
    })
}

/// A g²(0) spectrum assembled from records, with bootstrap errors.
#[derive(Debug, Clone)]
pub struct AssembledSpectrum {
    pub spectrum: SpectrumResult,
    /// Bootstrap standard error of every point, aligned with the grid.
    pub std_errors: Vec<f64>,
    /// Bootstrap standard error of the central width, when at least two
    /// replicates produced a width.
    pub width_std_error: Option<f64>,
    /// Detunings that appeared more than once and were averaged.
    pub duplicates: Vec<f64>,
}

/// Sorts records by detuning, correlates each one and assembles a spectrum
/// ready for central-width extraction. Records sharing a detuning are
/// averaged.
pub fn assemble_spectrum(traces: &[TraceSet], opts: &AnalyzerOptions) -> Result<AssembledSpectrum> {
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| traces[a].delta_label.total_cmp(&traces[b].delta_label));

    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        let label = traces[i].delta_label;
        match groups.last_mut() {
            Some((l, members)) if *l == label => members.push(i),
            _ => groups.push((label, alloc::vec![i])),
        }
    }
    if groups.len() < 5 {
        return Err(Error::TooFewTraces {
            found: groups.len(),
            needed: 5,
        });
    }
    if !groups.iter().any(|(l, _)| *l == 0.0) {
        return Err(Error::MissingCenter);
    }

    let mut duplicates = Vec::new();
    let mut grid = Vec::with_capacity(groups.len());
    let mut values = Vec::with_capacity(groups.len());
    let mut std_errors = Vec::with_capacity(groups.len());
    let mut point_blocks: Vec<Vec<Vec<PairMoments>>> = Vec::with_capacity(groups.len());
    for (label, members) in &groups {
        if members.len() > 1 {
            log::warn!(
                "{} records share detuning {label} rad/us; averaging their g2",
                members.len()
            );
            duplicates.push(*label);
        }
        let mut g = 0.0;
        let mut se2 = 0.0;
        let mut blocks = Vec::new();
        for &i in members {
            let ac = detrend(&traces[i], opts.detrend)?;
            let c = g2_zero_lag(&ac, opts)?;
            g += c.g2();
            se2 += c.std_error * c.std_error;
            blocks.push(c.blocks);
        }
        let k = members.len() as f64;
        grid.push(*label);
        values.push(Some(g / k));
        std_errors.push(se2.sqrt() / k);
        point_blocks.push(blocks);
    }

    let spectrum = SpectrumResult::from_values(grid.clone(), values, SpectrumKind::G2);

    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut widths = Vec::new();
    for _ in 0..opts.resamples {
        let replicate: Vec<Option<f64>> = point_blocks
            .iter()
            .map(|records| {
                let mut acc = 0.0;
                for blocks in records {
                    acc += stats::resample_blocks(blocks, &mut rng).pearson()?;
                }
                Some(acc / records.len() as f64)
            })
            .collect();
        let s = SpectrumResult::from_values(grid.clone(), replicate, SpectrumKind::G2);
        if let Some(w) = s.fwhm {
            widths.push(w);
        }
    }
    let width_std_error = (widths.len() >= 2).then(|| stats::std_dev(&widths));

    Ok(AssembledSpectrum {
        spectrum,
        std_errors,
        width_std_error,
        duplicates,
    })
}
