#![allow(dead_code)]

use dissipation::{Level, SpectralModel};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct Ensemble {
    pub levels: std::ops::RangeInclusive<usize>,
    pub energy: f64,
    pub min_gap: f64,
    pub min_overlap: f64,
    pub log_gamma: (f64, f64),
}

/// Levels uniform in `[-energy, energy]` with at least `min_gap` between
/// neighbours, overlaps uniform in `[min_overlap, 1]` then normalised, and
/// `log10 Γ` uniform.
pub fn random_models(ensemble: &Ensemble, count: usize, seed: u64) -> Vec<(SpectralModel, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let w = rng.random_range(ensemble.levels.clone());
            let energies = loop {
                let mut e: Vec<f64> = (0..w).map(|_| rng.random_range(-ensemble.energy..ensemble.energy)).collect();
                e.sort_by(f64::total_cmp);
                if e.windows(2).all(|p| p[1] - p[0] >= ensemble.min_gap) {
                    break e;
                }
            };
            let weights: Vec<f64> = (0..w).map(|_| rng.random_range(ensemble.min_overlap..=1.0)).collect();
            let total: f64 = weights.iter().sum();
            let levels = energies.iter().zip(&weights).map(|(&e, &p)| Level::new(e, p / total)).collect();
            let model = SpectralModel::new(levels, 1e-12, 1e-14).unwrap();
            let gamma = 10f64.powf(rng.random_range(ensemble.log_gamma.0..ensemble.log_gamma.1));
            (model, gamma)
        })
        .collect()
}

/// The wide ensemble: up to twelve levels in `[-5, 5]`, `Γ` in `[1e-2, 1e2]`.
pub fn wide_ensemble() -> Vec<(SpectralModel, f64)> {
    random_models(
        &Ensemble { levels: 1..=12, energy: 5.0, min_gap: 1e-2, min_overlap: 1e-3, log_gamma: (-2.0, 2.0) },
        100,
        20_201,
    )
}

/// Few well-separated levels and moderate `Γ`, so every mode decays within a
/// horizon that quadrature can resolve.
pub fn quadrature_ensemble() -> Vec<(SpectralModel, f64)> {
    random_models(
        &Ensemble { levels: 1..=6, energy: 2.0, min_gap: 0.2, min_overlap: 0.05, log_gamma: (-0.5, 0.5) },
        20,
        77,
    )
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect()
}

pub fn report(criterion: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {criterion:>2} {}: {name}  {detail}", if pass { "PASS" } else { "FAIL" });
}
