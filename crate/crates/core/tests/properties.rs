//! Invariants of the moment solver, width extraction and trace analyzer over
//! randomly drawn inputs.

use pnin_core::moments::{self, cross_correlation};
use pnin_core::spectro::{SpectrumKind, SpectrumResult};
use pnin_core::trace::{g2_zero_lag, AnalyzerOptions, TraceSet};
use pnin_core::ModelParams;
use proptest::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;

/// Weak-drive parameter sets spanning bench-top to vapour-cell scales.
fn params() -> impl Strategy<Value = ModelParams> {
    (
        2.0f64..4.0,    // log10(Γ/γ₂)
        0.01f64..1.0,   // Ω in units of Γ/5
        -1.0f64..2.0,   // log10(D/γ₂)
        -1.0f64..1.0,   // δ in units of Γ
        -30.0f64..30.0, // Δ in units of γ₂
        0.5f64..2.0,    // γ₁/γ₂
    )
        .prop_map(|(lg, om, ld, dl, dd, g1)| {
            let gamma2 = TAU * 0.01;
            let gamma = gamma2 * 10f64.powf(lg);
            ModelParams {
                rabi: om * gamma / 5.0,
                one_photon_detuning: dl * gamma,
                two_photon_detuning: dd * gamma2,
                excited_decay: gamma,
                ground_pop_decay: g1 * gamma2,
                ground_coh_decay: gamma2,
                laser_hwhm: gamma2 * 10f64.powf(ld),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cauchy_schwarz(p in params()) {
        let r = moments::g2_zero(&p).unwrap();
        prop_assert!(r.cov_im.abs() <= (r.var_im_coh1 * r.var_im_coh2).sqrt() * (1.0 + 1e-9));
        if let Some(g) = r.g2_zero {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&g));
        }
    }

    #[test]
    fn two_photon_mirror_symmetry(p in params()) {
        let p = p.with_one_photon_detuning(0.0);
        let a = moments::g2_zero(&p).unwrap().value().unwrap();
        let b = moments::g2_zero(&p.with_two_photon_detuning(-p.two_photon_detuning)).unwrap().value().unwrap();
        prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
    }

    #[test]
    fn perfect_correlation_on_raman_resonance(p in params()) {
        let g = moments::g2_zero(&p.with_two_photon_detuning(0.0)).unwrap().value().unwrap();
        prop_assert!((g - 1.0).abs() < 1e-9, "{}", g);
    }

    #[test]
    fn covariance_is_positive_semidefinite(p in params()) {
        let s = moments::solve(&p).unwrap();
        let real = s.real_covariance();
        let sym = (&real + real.transpose()) * 0.5;
        let scale = sym.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assert!(min >= -1e-9 * scale, "min eigenvalue {} at scale {}", min, scale);
        for c in [0usize, 1] {
            prop_assert!(s.covariance[(c, c)].im.abs() <= 1e-10 * (1.0 + s.covariance[(c, c)].re.abs()));
        }
    }

    #[test]
    fn mean_is_a_physical_state(p in params()) {
        let s = moments::solve(&p).unwrap();
        let m = s.mean;
        prop_assert!(m.hermiticity_defect() < 1e-12);
        for pop in [m.0[0].re, m.0[1].re, m.excited_population()] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&pop));
        }
    }

    #[test]
    fn covariance_is_linear_in_small_laser_width(p in params(), c in prop::sample::select(vec![0.5, 2.0])) {
        let p = p.with_laser_hwhm(p.ground_coh_decay * 1e-3);
        let a = moments::solve(&p).unwrap().covariance;
        let b = moments::solve(&p.with_laser_hwhm(c * p.laser_hwhm)).unwrap().covariance;
        let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for (x, y) in a.iter().zip(b.iter()) {
            if x.norm() > 1e-6 * scale {
                prop_assert!((y / x - c).norm() < 0.02 * c, "{} -> {}", x, y);
            }
        }
    }

    #[test]
    fn width_is_affine_invariant(a in 0.1f64..10.0, c in -5.0f64..5.0, w in 0.2f64..2.0) {
        let grid: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.1).collect();
        let f = |d: f64| (-d * d / (2.0 * w * w)).exp() - 0.8 / (1.0 + (d / (4.0 * w)).powi(2));
        let base = SpectrumResult::from_values(grid.clone(), grid.iter().map(|&d| Some(f(d))).collect(), SpectrumKind::G2);
        let moved = SpectrumResult::from_values(grid.clone(), grid.iter().map(|&d| Some(a * f(d) + c)).collect(), SpectrumKind::G2);
        let (x, y) = (base.fwhm.unwrap(), moved.fwhm.unwrap());
        prop_assert!((x / y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analyzer_scale_invariance_and_sign_flip(seed in 0u64..1000, a in 0.01f64..100.0, b in 0.01f64..100.0) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut z = move || -> f64 { StandardNormal.sample(&mut rng) };
        let n = 2000;
        let common: Vec<f64> = (0..n).map(|_| z()).collect();
        let x: Vec<f64> = common.iter().map(|c| c + 0.3 * z()).collect();
        let y: Vec<f64> = common.iter().map(|c| -c + 0.3 * z()).collect();
        let center = |v: Vec<f64>| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.into_iter().map(|t| t - m).collect::<Vec<_>>()
        };
        let (x, y) = (center(x), center(y));
        let opts = AnalyzerOptions::default();
        let g = |u: &[f64], v: &[f64]| g2_zero_lag(&TraceSet::new(0.1, u.to_vec(), v.to_vec(), 0.0).unwrap(), &opts).unwrap().g2();
        let base = g(&x, &y);
        let xs: Vec<f64> = x.iter().map(|t| a * t).collect();
        let ys: Vec<f64> = y.iter().map(|t| b * t).collect();
        prop_assert!((g(&xs, &ys) - base).abs() < 1e-12);
        let yn: Vec<f64> = y.iter().map(|t| -t).collect();
        prop_assert_eq!(g(&x, &yn), -base);
    }
}

#[test]
fn zero_laser_width_has_no_covariance() {
    let p = ModelParams::phenomenological(TAU * 2.0, 0.0).with_two_photon_detuning(0.4);
    let s = moments::solve(&p).unwrap();
    assert!(s.covariance.iter().all(|z| z.norm() < 1e-12));
    assert!(cross_correlation(&s).degenerate);
}
