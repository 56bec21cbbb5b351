#![allow(dead_code)]

use pnin_core::{Executor, ModelParams};
use std::f64::consts::TAU;

/// Scoped-thread executor so the slower integration tests use every core.
pub struct Threads;

impl Executor for Threads {
    fn map<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let workers = std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(len.max(1));
        let f = &f;
        let mut out: Vec<(usize, T)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    s.spawn(move || {
                        (w..len)
                            .step_by(workers)
                            .map(|i| (i, f(i)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap())
                .collect()
        });
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, t)| t).collect()
    }
}

/// Scaled bench-top parameters: Γ = 2π×5, γ₁ = γ₂ = 2π×0.01, D = 2π×0.1.
pub fn desk(rabi_mhz: f64) -> ModelParams {
    ModelParams {
        rabi: TAU * rabi_mhz,
        one_photon_detuning: 0.0,
        two_photon_detuning: 0.0,
        excited_decay: TAU * 5.0,
        ground_pop_decay: TAU * 0.01,
        ground_coh_decay: TAU * 0.01,
        laser_hwhm: TAU * 0.1,
    }
}
