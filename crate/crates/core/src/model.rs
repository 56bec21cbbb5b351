//! Physical parameters of the Λ system and the generators of the
//! phase-averaged moment equations.
//!
//! Both fields come from one laser, so in the frame that removes the common
//! laser phase φ(t) the Rabi frequencies are real and the phase noise enters
//! only through the optical coherences:
//!
//! ```text
//! du/dt = (A₀ − i φ̇ N) u + b,     ⟨φ̇(t) φ̇(t')⟩ = 2D δ(t − t')
//! ```
//!
//! where `u` is the 8-component [`DensityVector`] and `N` holds the winding
//! number of each component (how many factors of e^{iφ} it carries). Gaussian
//! averaging of this Stratonovich equation gives the mean drift `A₀ − D N²`
//! and, for the covariance `C = ⟨u uᵀ⟩ − ⟨u⟩⟨u⟩ᵀ`,
//!
//! ```text
//! dC/dt = [Ã₀ − D B̃₁²] C + D (B̃₂ − B̃₁²) (⟨u⟩ ⊗ ⟨u⟩)
//! ```
//!
//! with `Ã₀ = A₀⊗I + I⊗A₀`, `B̃₁ = N⊗I + I⊗N` and `B̃₂ = N²⊗I + I⊗N²`.
//! Writing the noise matrix as `B = iN/√2` recovers the `2DB²` form of the
//! averaged equations often quoted in the literature.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{czero, kron_sum, CMatrix, CVector};

/// Rates and detunings of the Λ system, all in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Total Rabi frequency Ω. Each field carries Ω/√2.
    pub rabi: f64,
    /// Common one-photon detuning δ (energy −δ on the excited state).
    pub one_photon_detuning: f64,
    /// Two-photon (Raman) detuning Δ, split as ±Δ/2 on the grounds.
    pub two_photon_detuning: f64,
    /// Excited-state decay rate Γ, branching equally to both grounds.
    pub excited_decay: f64,
    /// Relaxation rate γ₁ of the ground population difference.
    pub ground_pop_decay: f64,
    /// Decay rate γ₂ of the ground-state coherence.
    pub ground_coh_decay: f64,
    /// Laser half width at half maximum D (phase-diffusion coefficient).
    pub laser_hwhm: f64,
}

/// Raised when Ω is not small compared to Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeWarning {
    pub rabi: f64,
    pub limit: f64,
}

impl ModelParams {
    /// The phenomenological parameter set: γ₂ = π×78 kHz, Γ = 2π×500 MHz,
    /// γ₁ = γ₂, δ = Δ = 0.
    pub fn phenomenological(rabi: f64, laser_hwhm: f64) -> Self {
        ModelParams {
            rabi,
            one_photon_detuning: 0.0,
            two_photon_detuning: 0.0,
            excited_decay: crate::units::GAMMA_PHENOMENOLOGICAL,
            ground_pop_decay: crate::units::GAMMA2_DEFAULT,
            ground_coh_decay: crate::units::GAMMA2_DEFAULT,
            laser_hwhm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rabi", self.rabi),
            ("one_photon_detuning", self.one_photon_detuning),
            ("two_photon_detuning", self.two_photon_detuning),
            ("excited_decay", self.excited_decay),
            ("ground_pop_decay", self.ground_pop_decay),
            ("ground_coh_decay", self.ground_coh_decay),
            ("laser_hwhm", self.laser_hwhm),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} is not finite")));
            }
        }
        if self.excited_decay <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "excited_decay must be positive, got {}",
                self.excited_decay
            )));
        }
        for (name, v) in [
            ("rabi", self.rabi),
            ("ground_pop_decay", self.ground_pop_decay),
            ("ground_coh_decay", self.ground_coh_decay),
            ("laser_hwhm", self.laser_hwhm),
        ] {
            if v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The weak-drive condition Ω < Γ/5 under which the excited state
    /// follows the ground states adiabatically.
    pub fn regime_warning(&self) -> Option<RegimeWarning> {
        let limit = self.excited_decay / 5.0;
        (self.rabi >= limit).then_some(RegimeWarning {
            rabi: self.rabi,
            limit,
        })
    }

    pub fn with_rabi(mut self, rabi: f64) -> Self {
        self.rabi = rabi;
        self
    }

    pub fn with_two_photon_detuning(mut self, delta: f64) -> Self {
        self.two_photon_detuning = delta;
        self
    }

    pub fn with_one_photon_detuning(mut self, delta: f64) -> Self {
        self.one_photon_detuning = delta;
        self
    }

    pub fn with_laser_hwhm(mut self, d: f64) -> Self {
        self.laser_hwhm = d;
        self
    }

    pub fn with_excited_decay(mut self, gamma: f64) -> Self {
        self.excited_decay = gamma;
        self
    }
}

/// Physical role of each of the three levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Ground1,
    Ground2,
    Excited,
}

/// Maps levels onto rows/columns of the 3×3 density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLabeling {
    pub excited_index: usize,
    pub ground1_index: usize,
    pub ground2_index: usize,
}

impl Default for StateLabeling {
    /// Grounds first, excited last (the excited state is the one shifted by
    /// the one-photon detuning).
    fn default() -> Self {
        StateLabeling {
            excited_index: 2,
            ground1_index: 0,
            ground2_index: 1,
        }
    }
}

impl StateLabeling {
    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 3];
        for i in [self.excited_index, self.ground1_index, self.ground2_index] {
            if i > 2 || seen[i] {
                return Err(Error::InvalidParams(format!(
                    "state labeling {self:?} is not a permutation of 0..3"
                )));
            }
            seen[i] = true;
        }
        Ok(())
    }

    pub fn index(&self, level: Level) -> usize {
        match level {
            Level::Ground1 => self.ground1_index,
            Level::Ground2 => self.ground2_index,
            Level::Excited => self.excited_index,
        }
    }
}

/// Independent density-matrix elements, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    G1G1,
    G2G2,
    EG1,
    G1E,
    EG2,
    G2E,
    G1G2,
    G2G1,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::G1G1,
        Component::G2G2,
        Component::EG1,
        Component::G1E,
        Component::EG2,
        Component::G2E,
        Component::G1G2,
        Component::G2G1,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Component {
        Component::ALL[i]
    }

    /// Row and column level of the element.
    pub fn levels(self) -> (Level, Level) {
        use Level::*;
        match self {
            Component::G1G1 => (Ground1, Ground1),
            Component::G2G2 => (Ground2, Ground2),
            Component::EG1 => (Excited, Ground1),
            Component::G1E => (Ground1, Excited),
            Component::EG2 => (Excited, Ground2),
            Component::G2E => (Ground2, Excited),
            Component::G1G2 => (Ground1, Ground2),
            Component::G2G1 => (Ground2, Ground1),
        }
    }

    /// The Hermitian partner: ρ_ji for ρ_ij.
    pub fn conjugate(self) -> Component {
        match self {
            Component::EG1 => Component::G1E,
            Component::G1E => Component::EG1,
            Component::EG2 => Component::G2E,
            Component::G2E => Component::EG2,
            Component::G1G2 => Component::G2G1,
            Component::G2G1 => Component::G1G2,
            c => c,
        }
    }

    /// Image under relabelling ground 1 ↔ ground 2.
    pub fn exchanged(self) -> Component {
        match self {
            Component::G1G1 => Component::G2G2,
            Component::G2G2 => Component::G1G1,
            Component::EG1 => Component::EG2,
            Component::EG2 => Component::EG1,
            Component::G1E => Component::G2E,
            Component::G2E => Component::G1E,
            Component::G1G2 => Component::G2G1,
            Component::G2G1 => Component::G1G2,
        }
    }

    /// Number of laser-phase factors e^{iφ} carried by the element.
    pub fn winding(self) -> i8 {
        match self {
            Component::EG1 | Component::EG2 => 1,
            Component::G1E | Component::G2E => -1,
            _ => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::G1G1 => "rho_g1g1",
            Component::G2G2 => "rho_g2g2",
            Component::EG1 => "rho_eg1",
            Component::G1E => "rho_g1e",
            Component::EG2 => "rho_eg2",
            Component::G2E => "rho_g2e",
            Component::G1G2 => "rho_g1g2",
            Component::G2G1 => "rho_g2g1",
        }
    }
}

/// The state vector `u`; the excited population is implicit,
/// ρ_ee = 1 − ρ_g1g1 − ρ_g2g2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityVector(pub [Complex64; 8]);

impl DensityVector {
    /// Equal mixture of the two ground states.
    pub fn ground_mixture() -> Self {
        let mut c = [czero(); 8];
        c[0] = Complex64::new(0.5, 0.0);
        c[1] = Complex64::new(0.5, 0.0);
        DensityVector(c)
    }

    pub fn get(&self, c: Component) -> Complex64 {
        self.0[c.index()]
    }

    pub fn excited_population(&self) -> f64 {
        1.0 - self.0[0].re - self.0[1].re
    }

    /// Largest violation of the conjugate pairings and of real populations.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = self.0[0].im.abs().max(self.0[1].im.abs());
        for c in [Component::EG1, Component::EG2, Component::G1G2] {
            worst = worst.max((self.get(c) - self.get(c.conjugate()).conj()).norm());
        }
        worst
    }

    /// Full 3×3 density matrix under `labeling`.
    pub fn to_matrix(&self, labeling: &StateLabeling) -> [[Complex64; 3]; 3] {
        let mut r = [[czero(); 3]; 3];
        for c in Component::ALL {
            let (a, b) = c.levels();
            r[labeling.index(a)][labeling.index(b)] = self.get(c);
        }
        let e = labeling.excited_index;
        r[e][e] = Complex64::new(self.excited_population(), 0.0);
        r
    }

    pub fn from_matrix(r: &[[Complex64; 3]; 3], labeling: &StateLabeling) -> Self {
        let mut c = [czero(); 8];
        for comp in Component::ALL {
            let (a, b) = comp.levels();
            c[comp.index()] = r[labeling.index(a)][labeling.index(b)];
        }
        DensityVector(c)
    }

    pub fn as_vector(&self) -> CVector {
        CVector::from_column_slice(&self.0)
    }

    pub fn from_vector(v: &CVector) -> Self {
        let mut c = [czero(); 8];
        c.copy_from_slice(v.as_slice());
        DensityVector(c)
    }
}

/// Matrices of the first- and second-moment equations.
#[derive(Debug, Clone)]
pub struct GeneratorSet {
    /// Deterministic Bloch drift A₀ (8×8).
    pub drift: CMatrix,
    /// Affine source b from the eliminated excited population.
    pub source: CVector,
    /// Diagonal of N: the winding number of every component.
    pub noise_coupling: [f64; 8],
    /// D used by the averaged generators.
    pub laser_hwhm: f64,
    pub lifted: Option<LiftedGenerators>,
}

/// 64-dimensional generators acting on the row-major vectorised covariance.
#[derive(Debug, Clone)]
pub struct LiftedGenerators {
    /// Ã₀ = A₀⊗I + I⊗A₀.
    pub lifted_drift: CMatrix,
    /// Diagonal of B̃₁ = N⊗I + I⊗N (winding numbers add).
    pub lifted_noise: Vec<f64>,
    /// Diagonal of B̃₂ = N²⊗I + I⊗N².
    pub cross_noise: Vec<f64>,
}

impl GeneratorSet {
    /// A₀ − D N²: the drift of the phase-averaged mean.
    pub fn averaged_drift(&self) -> CMatrix {
        let mut a = self.drift.clone();
        for (k, n) in self.noise_coupling.iter().enumerate() {
            a[(k, k)] -= Complex64::new(self.laser_hwhm * n * n, 0.0);
        }
        a
    }

    /// Ã₀ − D B̃₁², the homogeneous part of the covariance equation.
    pub fn lifted_operator(&self) -> Option<CMatrix> {
        let lifted = self.lifted.as_ref()?;
        let mut op = lifted.lifted_drift.clone();
        for (k, n) in lifted.lifted_noise.iter().enumerate() {
            op[(k, k)] -= Complex64::new(self.laser_hwhm * n * n, 0.0);
        }
        Some(op)
    }

    /// Diagonal of D (B̃₂ − B̃₁²), the coupling of the covariance equation to
    /// ⟨u⟩ ⊗ ⟨u⟩. Entry (j, k) equals −2D n_j n_k.
    pub fn lifted_source(&self) -> Option<Vec<f64>> {
        let lifted = self.lifted.as_ref()?;
        Some(
            lifted
                .cross_noise
                .iter()
                .zip(&lifted.lifted_noise)
                .map(|(b2, b1)| self.laser_hwhm * (b2 - b1 * b1))
                .collect(),
        )
    }
}

/// Coupling matrix element for each field: half of the per-field Rabi
/// frequency Ω/√2, with the −d·E sign.
pub fn field_coupling(params: &ModelParams) -> f64 {
    -params.rabi / (2.0 * SQRT_2)
}

type Rho = [[Complex64; 3]; 3];

/// Deterministic Bloch right-hand side −i[H, ρ] + decay, on the full 3×3
/// matrix.
fn bloch_rhs(params: &ModelParams, l: &StateLabeling, rho: &Rho) -> Rho {
    let (e, g1, g2) = (l.excited_index, l.ground1_index, l.ground2_index);
    let mut h = [[czero(); 3]; 3];
    h[e][e] = Complex64::new(-params.one_photon_detuning, 0.0);
    h[g1][g1] = Complex64::new(-params.two_photon_detuning / 2.0, 0.0);
    h[g2][g2] = Complex64::new(params.two_photon_detuning / 2.0, 0.0);
    let k = Complex64::new(field_coupling(params), 0.0);
    for g in [g1, g2] {
        h[e][g] = k;
        h[g][e] = k;
    }

    let mut out = [[czero(); 3]; 3];
    let minus_i = Complex64::new(0.0, -1.0);
    for i in 0..3 {
        for j in 0..3 {
            let mut comm = czero();
            for m in 0..3 {
                comm += h[i][m] * rho[m][j] - rho[i][m] * h[m][j];
            }
            out[i][j] = minus_i * comm;
        }
    }

    let gamma = params.excited_decay;
    let ree = rho[e][e];
    out[e][e] -= ree * gamma;
    out[g1][g1] += ree * (gamma / 2.0);
    out[g2][g2] += ree * (gamma / 2.0);
    for g in [g1, g2] {
        out[e][g] -= rho[e][g] * (gamma / 2.0);
        out[g][e] -= rho[g][e] * (gamma / 2.0);
    }
    out[g1][g2] -= rho[g1][g2] * params.ground_coh_decay;
    out[g2][g1] -= rho[g2][g1] * params.ground_coh_decay;
    let diff = rho[g1][g1] - rho[g2][g2];
    out[g1][g1] -= diff * (params.ground_pop_decay / 2.0);
    out[g2][g2] += diff * (params.ground_pop_decay / 2.0);
    out
}

fn project(r: &Rho, l: &StateLabeling) -> CVector {
    CVector::from_iterator(
        8,
        Component::ALL.iter().map(|c| {
            let (a, b) = c.levels();
            r[l.index(a)][l.index(b)]
        }),
    )
}

/// First-moment generators with the default labeling.
pub fn build_first_moment_generators(params: &ModelParams) -> Result<GeneratorSet> {
    build_first_moment_generators_with(params, &StateLabeling::default())
}

/// Projects the Bloch equation onto `u` with ρ_ee eliminated by the trace
/// condition. Column j of A₀ is the response to the unit vector e_j, and
/// b is the response to u = 0 (all population in the excited state).
pub fn build_first_moment_generators_with(
    params: &ModelParams,
    labeling: &StateLabeling,
) -> Result<GeneratorSet> {
    params.validate()?;
    labeling.validate()?;
    if let Some(w) = params.regime_warning() {
        log::warn!(
            "rabi frequency {:.4} rad/us is not below excited_decay/5 = {:.4} rad/us; \
             the weak-drive regime assumed by the model does not hold",
            w.rabi,
            w.limit
        );
    }
    let zero = DensityVector([czero(); 8]);
    let source = project(
        &bloch_rhs(params, labeling, &zero.to_matrix(labeling)),
        labeling,
    );
    let mut drift = CMatrix::zeros(8, 8);
    for j in 0..8 {
        let mut unit = [czero(); 8];
        unit[j] = Complex64::new(1.0, 0.0);
        let col = project(
            &bloch_rhs(params, labeling, &DensityVector(unit).to_matrix(labeling)),
            labeling,
        ) - &source;
        drift.set_column(j, &col);
    }
    let mut noise_coupling = [0.0; 8];
    for c in Component::ALL {
        noise_coupling[c.index()] = c.winding() as f64;
    }
    Ok(GeneratorSet {
        drift,
        source,
        noise_coupling,
        laser_hwhm: params.laser_hwhm,
        lifted: None,
    })
}

/// Adds the 64-dimensional covariance generators. The b-dependent terms of
/// the raw second moment, b⊗⟨u⟩ + ⟨u⟩⊗b, cancel exactly against the
/// derivative of ⟨u⟩⊗⟨u⟩, so the lifted drift is the pure Kronecker sum.
pub fn build_second_moment_generators(
    mut gen: GeneratorSet,
    params: &ModelParams,
) -> Result<GeneratorSet> {
    params.validate()?;
    gen.laser_hwhm = params.laser_hwhm;
    let n = &gen.noise_coupling;
    let mut lifted_noise = Vec::with_capacity(64);
    let mut cross_noise = Vec::with_capacity(64);
    for j in 0..8 {
        for k in 0..8 {
            lifted_noise.push(n[j] + n[k]);
            cross_noise.push(n[j] * n[j] + n[k] * n[k]);
        }
    }
    gen.lifted = Some(LiftedGenerators {
        lifted_drift: kron_sum(&gen.drift),
        lifted_noise,
        cross_noise,
    });
    Ok(gen)
}

/// Both generator sets in one call.
pub fn build_generators(params: &ModelParams) -> Result<GeneratorSet> {
    build_second_moment_generators(build_first_moment_generators(params)?, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::mhz;

    fn desk() -> ModelParams {
        ModelParams {
            rabi: mhz(0.8),
            one_photon_detuning: mhz(0.3),
            two_photon_detuning: mhz(0.02),
            excited_decay: mhz(5.0),
            ground_pop_decay: mhz(0.01),
            ground_coh_decay: mhz(0.01),
            laser_hwhm: mhz(0.1),
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let p = desk();
        assert!(matches!(
            build_first_moment_generators(&ModelParams {
                excited_decay: 0.0,
                ..p
            }),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            build_first_moment_generators(&ModelParams {
                ground_coh_decay: -1.0,
                ..p
            }),
            Err(Error::InvalidParams(_))
        ));
        assert!(StateLabeling {
            excited_index: 0,
            ground1_index: 0,
            ground2_index: 1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn regime_warning_threshold() {
        let p = desk();
        assert!(p.regime_warning().is_none());
        assert!(p
            .with_rabi(p.excited_decay / 5.0)
            .regime_warning()
            .is_some());
    }

    // Hand derivation: under ρ_eg → ρ_eg e^{iφ} the optical coherences pick
    // up −iφ̇ρ_eg and their conjugates +iφ̇ρ_ge; populations and the ground
    // coherence carry no laser phase.
    #[test]
    fn winding_numbers() {
        let g = build_first_moment_generators(&desk()).unwrap();
        assert_eq!(g.noise_coupling, [0.0, 0.0, 1.0, -1.0, 1.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn undriven_drift_is_block_diagonal() {
        let g = build_first_moment_generators(&desk().with_rabi(0.0).with_laser_hwhm(0.0)).unwrap();
        let pops = [0usize, 1];
        let cohs = [2usize, 3, 4, 5, 6, 7];
        for &i in &pops {
            for &j in &cohs {
                assert_eq!(g.drift[(i, j)], czero());
                assert_eq!(g.drift[(j, i)], czero());
            }
        }
        for &j in &cohs {
            assert_eq!(g.source[j], czero());
        }
    }

    #[test]
    fn averaged_drift_is_linear_in_laser_width() {
        let p = desk();
        let d0 = build_first_moment_generators(&p.with_laser_hwhm(0.0)).unwrap();
        let d1 = build_first_moment_generators(&p).unwrap();
        let d2 = build_first_moment_generators(&p.with_laser_hwhm(2.0 * p.laser_hwhm)).unwrap();
        assert_eq!(d0.averaged_drift(), d0.drift);
        let a0 = d0.averaged_drift();
        let diff1 = d1.averaged_drift() - &a0;
        let diff2 = d2.averaged_drift() - &a0;
        assert!((diff2 - diff1.clone() * Complex64::new(2.0, 0.0)).norm() < 1e-14);
        // the added rate is D on optical coherences only
        for k in 0..8 {
            let want = -p.laser_hwhm * (Component::from_index(k).winding() as f64).powi(2);
            assert!((diff1[(k, k)].re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn exchange_symmetry_is_a_permutation_similarity() {
        let p = desk();
        let a = build_first_moment_generators(&p.with_one_photon_detuning(0.0)).unwrap();
        let b = build_first_moment_generators(
            &p.with_one_photon_detuning(0.0)
                .with_two_photon_detuning(-p.two_photon_detuning),
        )
        .unwrap();
        for i in Component::ALL {
            for j in Component::ALL {
                let lhs = b.drift[(i.exchanged().index(), j.exchanged().index())];
                assert!((lhs - a.drift[(i.index(), j.index())]).norm() < 1e-14);
            }
            assert!((b.source[i.exchanged().index()] - a.source[i.index()]).norm() < 1e-14);
        }
    }

    #[test]
    fn labeling_permutation_leaves_generators_unchanged() {
        let p = desk();
        let a = build_first_moment_generators(&p).unwrap();
        let b = build_first_moment_generators_with(
            &p,
            &StateLabeling {
                excited_index: 0,
                ground1_index: 2,
                ground2_index: 1,
            },
        )
        .unwrap();
        assert!((a.drift - b.drift).norm() < 1e-14);
        assert!((a.source - b.source).norm() < 1e-14);
    }

    #[test]
    fn lifted_generators() {
        let p = desk();
        let g = build_generators(&p).unwrap();
        let lifted = g.lifted.as_ref().unwrap();
        assert_eq!(lifted.lifted_drift.nrows(), 64);
        let src = g.lifted_source().unwrap();
        let idx = |a: Component, b: Component| a.index() * 8 + b.index();
        // winding numbers add
        assert_eq!(
            lifted.lifted_noise[idx(Component::EG1, Component::EG2)],
            2.0
        );
        assert_eq!(
            lifted.lifted_noise[idx(Component::EG1, Component::G2E)],
            0.0
        );
        assert_eq!(
            lifted.lifted_noise[idx(Component::G1G2, Component::G1E)],
            -1.0
        );
        // (B̃₂ − B̃₁²) is −2 n_j n_k
        assert!((src[idx(Component::EG1, Component::EG2)] + 2.0 * p.laser_hwhm).abs() < 1e-15);
        assert!((src[idx(Component::EG1, Component::G2E)] - 2.0 * p.laser_hwhm).abs() < 1e-15);
        assert_eq!(src[idx(Component::G1G1, Component::G2G2)], 0.0);
        assert_eq!(src[idx(Component::G1G2, Component::EG1)], 0.0);

        let g0 = build_generators(&p.with_laser_hwhm(0.0)).unwrap();
        assert!(g0.lifted_source().unwrap().iter().all(|&v| v == 0.0));
    }
}
