//! Streaming moments, block bootstrap, rank correlation and monotone
//! interpolation.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;
use rand_core::RngCore;

/// Streaming first and second moments of a pair of series, mergeable in any
/// grouping (Welford update, Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMoments {
    pub count: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Σ(x − x̄)².
    pub m2_x: f64,
    /// Σ(y − ȳ)².
    pub m2_y: f64,
    /// Σ(x − x̄)(y − ȳ).
    pub c_xy: f64,
}

impl PairMoments {
    pub fn push(&mut self, x: f64, y: f64) {
        self.count += 1;
        let n = self.count as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, other: &PairMoments) -> PairMoments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        PairMoments {
            count: self.count + other.count,
            mean_x: self.mean_x + dx * nb / n,
            mean_y: self.mean_y + dy * nb / n,
            m2_x: self.m2_x + other.m2_x + dx * dx * na * nb / n,
            m2_y: self.m2_y + other.m2_y + dy * dy * na * nb / n,
            c_xy: self.c_xy + other.c_xy + dx * dy * na * nb / n,
        }
    }

    /// Population variances and covariance (divided by n).
    pub fn var_x(&self) -> f64 {
        self.m2_x / self.count as f64
    }

    pub fn var_y(&self) -> f64 {
        self.m2_y / self.count as f64
    }

    pub fn covariance(&self) -> f64 {
        self.c_xy / self.count as f64
    }

    /// Pearson correlation; `None` when either series has zero spread.
    pub fn pearson(&self) -> Option<f64> {
        if self.m2_x > 0.0 && self.m2_y > 0.0 {
            Some((self.c_xy / (self.m2_x.sqrt() * self.m2_y.sqrt())).clamp(-1.0, 1.0))
        } else {
            None
        }
    }
}

pub fn pool(blocks: &[PairMoments]) -> PairMoments {
    blocks
        .iter()
        .fold(PairMoments::default(), |acc, b| acc.merge(b))
}

/// Uniform index in `0..n` (n > 0) by rejection on the top bits.
pub fn uniform_index<R: RngCore>(rng: &mut R, n: usize) -> usize {
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Draws `blocks.len()` blocks with replacement and pools them.
pub fn resample_blocks<R: RngCore>(blocks: &[PairMoments], rng: &mut R) -> PairMoments {
    let mut acc = PairMoments::default();
    for _ in 0..blocks.len() {
        acc = acc.merge(&blocks[uniform_index(rng, blocks.len())]);
    }
    acc
}

/// Bootstrap replicates of the pooled Pearson coefficient over contiguous
/// blocks. Replicates with a degenerate variance are skipped.
pub fn bootstrap_pearson<R: RngCore>(
    blocks: &[PairMoments],
    resamples: usize,
    rng: &mut R,
) -> Vec<f64> {
    if blocks.is_empty() {
        return Vec::new();
    }
    (0..resamples)
        .filter_map(|_| resample_blocks(blocks, rng).pearson())
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n − 1 normalisation); zero for fewer than two
/// values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Ranks with ties assigned their average rank (1-based).
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than two points or constant
/// input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mut m = PairMoments::default();
    for (a, b) in ranks(x).into_iter().zip(ranks(y)) {
        m.push(a, b);
    }
    m.pearson()
}

/// Piecewise cubic Hermite interpolant with Fritsch–Carlson slopes. Each
/// segment is monotone whenever its end values are.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `x` must be strictly increasing with at least two points.
    pub fn new(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 2 || y.len() != n || x.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let secants: Vec<f64> = (0..n - 1)
            .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
            .collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            let (a, b) = (secants[i - 1], secants[i]);
            if a * b <= 0.0 {
                slopes[i] = 0.0;
            } else {
                // weighted harmonic mean (Fritsch–Butland), keeps monotonicity
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
            }
        }
        for i in 0..n - 1 {
            let d = secants[i];
            if d == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / d;
            let b = slopes[i + 1] / d;
            if a < 0.0 {
                slopes[i] = 0.0;
            }
            if b < 0.0 {
                slopes[i + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                slopes[i] = t * a * d;
                slopes[i + 1] = t * b * d;
            }
        }
        Some(MonotoneCubic {
            x: x.to_vec(),
            y: y.to_vec(),
            slopes,
        })
    }

    fn segment(&self, i: usize, t: f64) -> f64 {
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i]
            + h10 * h * self.slopes[i]
            + h01 * self.y[i + 1]
            + h11 * h * self.slopes[i + 1]
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.iter().position(|&v| v > t) {
            Some(0) => 0,
            Some(p) => p - 1,
            None => n - 2,
        };
        self.segment(i.min(n - 2), t)
    }

    /// Abscissa inside segment `i` where the interpolant equals `level`, by
    /// bisection. Requires the level to lie between the segment end values.
    pub fn crossing_in_segment(&self, i: usize, level: f64) -> Option<f64> {
        let (ya, yb) = (self.y[i], self.y[i + 1]);
        if (ya - level) * (yb - level) > 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (self.x[i], self.x[i + 1]);
        let rising = yb > ya;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let above = self.segment(i, mid) > level;
            if above == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}
