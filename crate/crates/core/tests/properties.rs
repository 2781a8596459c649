use dissipation::models::{disorder_draws, expm, propagate, tight_binding_ring, OpenSystem};
use dissipation::poles::find_poles;
use dissipation::resolvent::{compute_winding, resolvent_at, resolvent_derivative, PotentialField};
use dissipation::spectral::{jacobi_eigh, spectral_model};
use dissipation::stats::{conditional_mean, decay_density, moment, wavefunction_at};
use dissipation::{Level, QuantumSystem, SpectralModel, C64};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Up to eight levels with gaps in `[0.05, 1.5]` and overlaps in `[0.01, 1]`.
fn model_strategy() -> impl Strategy<Value = SpectralModel> {
    prop::collection::vec((0.05f64..1.5, 0.01f64..1.0), 1..8).prop_map(|raw| {
        let total: f64 = raw.iter().map(|(_, p)| p).sum();
        let mut e = -3.0;
        let levels = raw
            .iter()
            .map(|&(gap, p)| {
                e += gap;
                Level::new(e, p / total)
            })
            .collect();
        SpectralModel::new(levels, 1e-12, 1e-14).unwrap()
    })
}

fn gamma_strategy() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(|x| 10f64.powf(x))
}

fn hermitian_strategy(n: usize) -> impl Strategy<Value = DMatrix<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
        let a = DMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    })
}

fn state_strategy(n: usize) -> impl Strategy<Value = DVector<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let s = DVector::from_iterator(v.len(), v.into_iter().map(|(a, b)| C64::new(a, b)));
            let norm = s.norm();
            s / C64::new(norm, 0.0)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eigen_reconstruction(h in hermitian_strategy(5)) {
        let eig = jacobi_eigh(&h).unwrap();
        prop_assert!((eig.reconstruct() - &h).norm() < 1e-12 * (1.0 + h.norm()));
        prop_assert!(eig.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
    }

    #[test]
    fn model_is_invariant_under_basis_rotation(h in hermitian_strategy(4), g in hermitian_strategy(4), psi in state_strategy(4)) {
        let u = expm(&(g * C64::new(0.0, 1.0)));
        let a = spectral_model(&QuantumSystem::new(h.clone(), psi.clone(), 1.0).unwrap()).unwrap();
        let rotated_h = &u * &h * u.adjoint();
        let rotated_h = (&rotated_h + rotated_h.adjoint()) * C64::new(0.5, 0.0);
        let b = spectral_model(&QuantumSystem::new(rotated_h, &u * psi, 1.0).unwrap()).unwrap();
        prop_assert_eq!(a.winding(), b.winding());
        for (x, y) in a.levels().iter().zip(b.levels()) {
            prop_assert!((x.energy - y.energy).abs() < 1e-10);
            prop_assert!((x.overlap - y.overlap).abs() < 1e-10);
        }
        let total: f64 = a.overlaps().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potential_gradient_is_the_field(model in model_strategy(), gamma in gamma_strategy(), x in -3.0f64..-0.01, y in -4.0f64..4.0) {
        let field = PotentialField::new(model.clone(), gamma).unwrap();
        let (gx, gy) = field.gradient(x, y).unwrap();
        let want = 1.0 / gamma + resolvent_at(&model, C64::new(x, y)).unwrap();
        prop_assert!((C64::new(gx, -gy) - want).norm() < 1e-9 * (1.0 + want.norm()));
        let h = 1e-6 * (1.0 + x.abs());
        let fd = (field.value(x + h, y).unwrap() - field.value(x - h, y).unwrap()) / (2.0 * h);
        prop_assert!((fd - gx).abs() < 1e-5 * (1.0 + gx.abs()));
    }

    #[test]
    fn resolvent_derivative_matches_finite_difference(model in model_strategy(), x in -3.0f64..-0.1, y in -4.0f64..4.0) {
        let s = C64::new(x, y);
        let h = 1e-6;
        let fd = (resolvent_at(&model, s + h).unwrap() - resolvent_at(&model, s - h).unwrap()) / (2.0 * h);
        let exact = resolvent_derivative(&model, s).unwrap();
        prop_assert!((fd - exact).norm() < 1e-5 * (1.0 + exact.norm()));
    }

    #[test]
    fn poles_are_exact(model in model_strategy(), gamma in gamma_strategy()) {
        let poles = find_poles(&model, gamma).unwrap();
        prop_assert_eq!(poles.len(), model.winding());
        prop_assert!(poles.diagnostics().unwrap().is_exact());
    }

    #[test]
    fn mean_is_quantized_by_the_winding_number(model in model_strategy(), gamma in gamma_strategy()) {
        let poles = find_poles(&model, gamma).unwrap();
        let w = compute_winding(&model, gamma, 128).unwrap().winding;
        let scaled = 2.0 * gamma * moment(&poles, 1).unwrap();
        prop_assert!((scaled - scaled.round()).abs() < 1e-6);
        prop_assert_eq!(scaled.round() as i64, w);
        prop_assert_eq!(w, model.winding() as i64);
        prop_assert!((moment(&poles, 0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn density_is_non_negative_and_starts_at_one(model in model_strategy(), gamma in gamma_strategy(), t in 0.0f64..50.0) {
        let poles = find_poles(&model, gamma).unwrap();
        prop_assert!((wavefunction_at(&poles, 0.0) - 1.0).norm() < 1e-8);
        prop_assert!(decay_density(&poles, t) >= 0.0);
    }

    #[test]
    fn rescaling_energies_and_rate_rescales_time(model in model_strategy(), gamma in gamma_strategy(), c in 0.1f64..10.0) {
        let scaled = SpectralModel::new(
            model.levels().iter().map(|l| Level::new(c * l.energy, l.overlap)).collect(),
            1e-12,
            1e-14,
        ).unwrap();
        let a = find_poles(&model, gamma).unwrap();
        let b = find_poles(&scaled, c * gamma).unwrap();
        for m in 1..3 {
            let want = moment(&a, m).unwrap() / c.powi(m as i32);
            prop_assert!((moment(&b, m).unwrap() / want - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn conditional_mean_never_decreases(model in model_strategy(), gamma in gamma_strategy()) {
        let poles = find_poles(&model, gamma).unwrap();
        let mut last = 0.0;
        for k in 0..60 {
            let theta = 10f64.powf(-2.0 + 0.15 * k as f64) / gamma;
            let v = conditional_mean(&poles, theta).unwrap();
            prop_assert!(v >= last * (1.0 - 1e-9), "Θ = {theta}: {v} < {last}");
            last = v;
        }
    }

    #[test]
    fn propagator_composes(h in hermitian_strategy(4), psi in state_strategy(4), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
        let sys = QuantumSystem::new(h, psi.clone(), 0.8).unwrap();
        let a = sys.generator();
        let direct = expm(&(&a * C64::new(t1 + t2, 0.0)));
        let split = expm(&(&a * C64::new(t2, 0.0))) * expm(&(&a * C64::new(t1, 0.0)));
        prop_assert!((direct - split).norm() < 1e-9);
        let out = propagate(&sys, &psi, t1).unwrap();
        prop_assert!(out.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn norm_loss_is_the_decay_density(h in hermitian_strategy(4), psi in state_strategy(4), t in 0.1f64..5.0) {
        let sys = QuantumSystem::new(h, psi.clone(), 0.6).unwrap();
        let dt = 1e-5;
        let before = propagate(&sys, &psi, t - dt).unwrap().norm_squared();
        let after = propagate(&sys, &psi, t + dt).unwrap().norm_squared();
        let now = propagate(&sys, &psi, t).unwrap();
        let density = 2.0 * 0.6 * sys.decay_state().dotc(&now).norm_sqr();
        prop_assert!(((before - after) / (2.0 * dt) - density).abs() < 1e-6);
    }

    #[test]
    fn disorder_draws_reproduce(seed in any::<u64>(), n in 1usize..64) {
        prop_assert_eq!(disorder_draws(n, seed), disorder_draws(n, seed));
        let a = tight_binding_ring(8, 1.0, 0.5, seed, 1.0).unwrap();
        let b = tight_binding_ring(8, 1.0, 0.5, seed, 1.0).unwrap();
        prop_assert_eq!(a, b);
    }
}
