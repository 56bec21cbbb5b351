//! Stationary first and second moments and the zero-lag cross-correlation of
//! the converted intensity noise.
//!
//! In the optically thin limit the intensity fluctuation of field k is
//! proportional to Im δρ_eg,k, and the proportionality constants drop out of
//! the normalised g²(0).

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // unused when std float methods are linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{solve_refined, CMatrix, CVector};
use crate::model::{build_generators, Component, DensityVector, GeneratorSet, ModelParams};

/// Variance floor below which g²(0) is reported as undefined.
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-18;

const REFINEMENT_STEPS: usize = 2;

/// Stationary mean and covariance. `covariance[(j, k)] = ⟨u_j u_k⟩ − ⟨u_j⟩⟨u_k⟩`
/// (no complex conjugation).
#[derive(Debug, Clone)]
pub struct MomentState {
    pub mean: DensityVector,
    pub covariance: CMatrix,
}

impl MomentState {
    pub fn cov(&self, a: Component, b: Component) -> Complex64 {
        self.covariance[(a.index(), b.index())]
    }

    /// ⟨Im δx · Im δy⟩ from complex covariances:
    /// ¼[⟨x, y*⟩ + ⟨x*, y⟩ − ⟨x, y⟩ − ⟨x*, y*⟩].
    pub fn im_covariance(&self, x: Component, y: Component) -> f64 {
        let (xc, yc) = (x.conjugate(), y.conjugate());
        let v = self.cov(x, yc) + self.cov(xc, y) - self.cov(x, y) - self.cov(xc, yc);
        0.25 * v.re
    }

    /// Covariance of the real coordinates
    /// (ρ_g1g1, ρ_g2g2, Re ρ_eg1, Im ρ_eg1, Re ρ_eg2, Im ρ_eg2, Re ρ_g1g2, Im ρ_g1g2).
    /// The imaginary part of the transformed matrix is discarded; it vanishes
    /// for a physical state.
    pub fn real_covariance(&self) -> DMatrix<f64> {
        let t = real_coordinates();
        let c = &t * &self.covariance * t.transpose();
        c.map(|z| z.re)
    }

    /// Weighted mixture of independent states (weights should sum to one).
    pub fn weighted_sum(states: &[MomentState], weights: &[f64]) -> MomentState {
        let mut mean = CVector::zeros(8);
        let mut covariance = CMatrix::zeros(8, 8);
        for (s, &w) in states.iter().zip(weights) {
            let w = Complex64::new(w, 0.0);
            mean += s.mean.as_vector() * w;
            covariance += &s.covariance * w;
        }
        MomentState {
            mean: DensityVector::from_vector(&mean),
            covariance,
        }
    }
}

/// Rows map `u` to real coordinates: Re z = (z + z*)/2, Im z = (z − z*)/(2i).
pub fn real_coordinates() -> CMatrix {
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, -0.5);
    let mut t = CMatrix::zeros(8, 8);
    t[(0, Component::G1G1.index())] = Complex64::new(1.0, 0.0);
    t[(1, Component::G2G2.index())] = Complex64::new(1.0, 0.0);
    for (row, c) in [
        (2, Component::EG1),
        (4, Component::EG2),
        (6, Component::G1G2),
    ] {
        t[(row, c.index())] = half;
        t[(row, c.conjugate().index())] = half;
        t[(row + 1, c.index())] = half_i;
        t[(row + 1, c.conjugate().index())] = -half_i;
    }
    t
}

/// g²(0) and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    /// Normalised zero-lag cross-correlation; `None` when degenerate.
    pub g2_zero: Option<f64>,
    pub var_im_coh1: f64,
    pub var_im_coh2: f64,
    pub cov_im: f64,
    pub degenerate: bool,
}

impl CorrelationResult {
    pub fn from_moments(var1: f64, var2: f64, cov: f64, floor: f64) -> Self {
        let degenerate = !(var1.min(var2) >= floor) || var1.min(var2) <= 0.0;
        let g2_zero = (!degenerate).then(|| cov / (var1.sqrt() * var2.sqrt()));
        CorrelationResult {
            g2_zero,
            var_im_coh1: var1,
            var_im_coh2: var2,
            cov_im: cov,
            degenerate,
        }
    }

    /// The value, or [`Error::DegenerateVariance`].
    pub fn value(&self) -> Result<f64> {
        self.g2_zero.ok_or(Error::DegenerateVariance {
            var1: self.var_im_coh1,
            var2: self.var_im_coh2,
            floor: DEFAULT_VARIANCE_FLOOR,
        })
    }
}

/// Solves (A₀ − D N²)⟨u⟩ + b = 0.
pub fn solve_stationary_mean(gen: &GeneratorSet) -> Result<DensityVector> {
    let a = gen.averaged_drift();
    let rhs = -&gen.source;
    let sol = solve_refined(&a, &rhs, REFINEMENT_STEPS).map_err(|e| Error::SingularDrift {
        condition: e.condition,
    })?;
    log::debug!(
        "stationary mean: condition {:.3e}, relative residual {:.3e}",
        sol.condition,
        sol.relative_residual
    );
    Ok(DensityVector::from_vector(&sol.x))
}

/// Solves 0 = [Ã₀ − D B̃₁²] C + D (B̃₂ − B̃₁²)(⟨u⟩ ⊗ ⟨u⟩) for the stationary
/// covariance. `gen` must carry the lifted generators.
pub fn solve_stationary_covariance(
    gen: &GeneratorSet,
    mean: &DensityVector,
) -> Result<MomentState> {
    let (op, coupling) = match (gen.lifted_operator(), gen.lifted_source()) {
        (Some(op), Some(src)) => (op, src),
        _ => {
            return Err(Error::InvalidParams(
                "second-moment generators have not been built".into(),
            ))
        }
    };
    let m = mean.0;
    let forcing = CVector::from_iterator(64, (0..64).map(|r| -(m[r / 8] * m[r % 8]) * coupling[r]));
    if forcing.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(MomentState {
            mean: *mean,
            covariance: CMatrix::zeros(8, 8),
        });
    }
    let sol = solve_refined(&op, &forcing, REFINEMENT_STEPS).map_err(|e| {
        let (j, k) = (e.weakest_column / 8, e.weakest_column % 8);
        Error::SingularLiftedDrift {
            subspace: format!(
                "({}, {})",
                Component::from_index(j).name(),
                Component::from_index(k).name()
            ),
            condition: e.condition,
        }
    })?;
    log::debug!(
        "stationary covariance: condition {:.3e}, relative residual {:.3e}",
        sol.condition,
        sol.relative_residual
    );
    Ok(MomentState {
        mean: *mean,
        covariance: CMatrix::from_fn(8, 8, |j, k| sol.x[j * 8 + k]),
    })
}

/// g²(0) of Im δρ_eg1 and Im δρ_eg2 with the default variance floor.
pub fn cross_correlation(state: &MomentState) -> CorrelationResult {
    cross_correlation_with_floor(state, DEFAULT_VARIANCE_FLOOR)
}

pub fn cross_correlation_with_floor(state: &MomentState, floor: f64) -> CorrelationResult {
    let v1 = state.im_covariance(Component::EG1, Component::EG1);
    let v2 = state.im_covariance(Component::EG2, Component::EG2);
    let c = state.im_covariance(Component::EG1, Component::EG2);
    CorrelationResult::from_moments(v1, v2, c, floor)
}

/// Builds the generators and solves both moments for one parameter point.
pub fn solve(params: &ModelParams) -> Result<MomentState> {
    let gen = build_generators(params)?;
    let mean = solve_stationary_mean(&gen)?;
    solve_stationary_covariance(&gen, &mean)
}

/// g²(0) for one parameter point.
pub fn g2_zero(params: &ModelParams) -> Result<CorrelationResult> {
    Ok(cross_correlation(&solve(params)?))
}

/// Residual norms of the two stationary equations, relative to ‖b‖ and to
/// the forcing norm respectively.
pub fn residuals(gen: &GeneratorSet, state: &MomentState) -> (f64, f64) {
    let mean = state.mean.as_vector();
    let r1 = (gen.averaged_drift() * &mean + &gen.source).norm() / gen.source.norm();
    let (Some(op), Some(src)) = (gen.lifted_operator(), gen.lifted_source()) else {
        return (r1, f64::NAN);
    };
    let m = state.mean.0;
    let forcing: Vec<Complex64> = (0..64).map(|r| (m[r / 8] * m[r % 8]) * src[r]).collect();
    let forcing = CVector::from_vec(forcing);
    let c = CVector::from_fn(64, |r, _| state.covariance[(r / 8, r % 8)]);
    let fnorm = forcing.norm();
    let r2 = (op * c + &forcing).norm();
    (r1, if fnorm > 0.0 { r2 / fnorm } else { r2 })
}
