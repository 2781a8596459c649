//! Concrete systems and direct time propagation.
//!
//! * the driven two-level atom and its closed-form poles,
//! * tight-binding rings with on-site disorder and open lines,
//! * several orthonormal decay channels sharing one rate,
//! * `exp(-iHt - ΓDt)` by scaling and squaring, and the mean dissipation
//!   time obtained by integrating `F(t)` along the propagated state.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::PoleSet;
use crate::quadrature::adaptive_simpson_many;
use crate::spectral::{
    check_hermitian, cluster_levels, default_degeneracy_tol, jacobi_eigh, spectral_model, subspace_rank,
    QuantumSystem, SpectralModel, C64,
};

const TAYLOR_DEGREE: usize = 18;
const SCALED_NORM: f64 = 0.5;
const NORM_GROWTH_TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-12;
/// Survival probability that must be reached before `t_max`.
pub const SURVIVAL_TOL: f64 = 1e-10;
/// Survival probability at which time integration stops early.
const SURVIVAL_STOP: f64 = 1e-13;
/// Per-panel quadrature tolerance relative to the probability decaying in it.
const PANEL_TOL: f64 = 1e-12;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn site(n: usize, k: usize) -> DVector<C64> {
    let mut v = DVector::zeros(n);
    v[k] = c(1.0);
    v
}

// ---------------------------------------------------------------------------
// Two-level atom

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub delta: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl TwoLevelParams {
    pub fn new(delta: f64, omega: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::invalid(format!("omega must be non-negative, got {omega}")));
        }
        if !delta.is_finite() {
            return Err(Error::invalid("delta must be finite"));
        }
        Ok(Self { delta, omega, gamma })
    }

    /// `x = 2Ω/δ`.
    pub fn x(&self) -> f64 {
        2.0 * self.omega / self.delta
    }

    /// `y = 2Ω/(Γ + iδ)`.
    pub fn y(&self) -> C64 {
        c(2.0 * self.omega) / C64::new(self.gamma, self.delta)
    }
}

/// `H = [[δ/2, Ω], [Ω, -δ/2]]` with the excited state `(1, 0)` decaying.
pub fn two_level_system(params: TwoLevelParams) -> Result<QuantumSystem> {
    let TwoLevelParams { delta, omega, gamma } = params;
    let h = DMatrix::from_row_slice(2, 2, &[c(0.5 * delta), c(omega), c(omega), c(-0.5 * delta)]);
    QuantumSystem::new(h, site(2, 0), gamma)
}

/// Poles `-{Γ/2 ± (Γ+iδ)/2 √(1-y²)}` and residual coefficients
/// `-(Γ/2) y² / (1 - y² ∓ √(1-y²))`, principal branch.
pub fn two_level_closed_forms(params: TwoLevelParams) -> Result<PoleSet> {
    let params = TwoLevelParams::new(params.delta, params.omega, params.gamma)?;
    let TwoLevelParams { delta, omega, gamma } = params;
    let model = spectral_model(&two_level_system(params)?)?;
    if omega == 0.0 {
        return Ok(PoleSet::from_parts(vec![C64::new(-gamma, -0.5 * delta)], vec![c(gamma)], gamma, model));
    }
    let y2 = params.y().powi(2);
    let one_minus = 1.0 - y2;
    if one_minus == c(0.0) {
        return Err(Error::ExceptionalPoint);
    }
    let root = one_minus.sqrt();
    let half = C64::new(gamma, delta) * 0.5;
    let mut pairs = [1.0, -1.0].map(|sign| {
        let pole = -(0.5 * gamma + sign * half * root);
        let residual = -0.5 * gamma * y2 / (one_minus - sign * root);
        (pole, residual)
    });
    pairs.sort_by(|a, b| a.0.im.total_cmp(&b.0.im).then(a.0.re.total_cmp(&b.0.re)));
    let (poles, residuals) = pairs.into_iter().unzip();
    Ok(PoleSet::from_parts(poles, residuals, gamma, model))
}

/// `Var T = (Γ² + δ² + 2Ω²) / (2Γ²Ω²)`.
pub fn two_level_variance(params: TwoLevelParams) -> f64 {
    let TwoLevelParams { delta, omega, gamma } = params;
    (gamma * gamma + delta * delta + 2.0 * omega * omega) / (2.0 * gamma * gamma * omega * omega)
}

/// Small-Ω approximation of the conditional mean: the fast mode's truncated
/// mean plus the slow mode's crossover term.
pub fn two_level_conditional_mean_asymptotic(params: TwoLevelParams, theta: f64) -> f64 {
    let TwoLevelParams { delta, omega, gamma } = params;
    let fast = 2.0 * gamma * theta;
    let norm = -(-fast).exp_m1();
    let first = 1.0 - fast * (-fast).exp() / norm;
    let a = 2.0 * gamma * omega * omega * theta / (gamma * gamma + delta * delta);
    let slow = (-(-a).exp_m1() - a * (-a).exp()) / norm;
    (first + slow) / (2.0 * gamma)
}

// ---------------------------------------------------------------------------
// Lattices

/// On-site disorder draws in `[-1, 1)`: ChaCha20 keyed by `seed`, one 64-bit
/// word per site, `u = 2 (word >> 11) 2^-53 - 1`.
pub fn disorder_draws(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| 2.0 * ((rng.next_u64() >> 11) as f64) * (1.0 / (1u64 << 53) as f64) - 1.0)
        .collect()
}

/// Ring of `l` sites, hopping `-γ`, on-site energies `ε u_x`, decaying
/// through the last site.
pub fn tight_binding_ring(l: usize, hop: f64, epsilon: f64, seed: u64, gamma: f64) -> Result<QuantumSystem> {
    if l < 4 || l % 2 != 0 {
        return Err(Error::invalid(format!("ring length must be even and at least 4, got {l}")));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) || !hop.is_finite() {
        return Err(Error::invalid("hopping and disorder strength must be finite, disorder non-negative"));
    }
    let mut h = DMatrix::zeros(l, l);
    for x in 0..l {
        h[(x, (x + 1) % l)] = c(-hop);
        h[((x + 1) % l, x)] = c(-hop);
    }
    if epsilon > 0.0 {
        for (x, u) in disorder_draws(l, seed).into_iter().enumerate() {
            h[(x, x)] = c(epsilon * u);
        }
    }
    QuantumSystem::new(h, site(l, l - 1), gamma)
}

/// Open chain of `l` sites with hopping `-γ`.
pub fn tight_binding_line(l: usize, hop: f64) -> Result<DMatrix<C64>> {
    if l == 0 {
        return Err(Error::invalid("line needs at least one site"));
    }
    let mut h = DMatrix::zeros(l, l);
    for x in 0..l - 1 {
        h[(x, x + 1)] = c(-hop);
        h[(x + 1, x)] = c(-hop);
    }
    Ok(h)
}

/// `√(1-δ)|a> + √δ|b>` with 1-based site labels.
pub fn two_site_state(dim: usize, primary: usize, secondary: usize, delta: f64) -> Result<DVector<C64>> {
    if primary == 0 || secondary == 0 || primary > dim || secondary > dim || primary == secondary {
        return Err(Error::invalid(format!("sites {primary} and {secondary} must be distinct in 1..={dim}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("admixture must lie in [0, 1], got {delta}")));
    }
    let mut v = DVector::zeros(dim);
    v[primary - 1] = c((1.0 - delta).sqrt());
    v[secondary - 1] = c(delta.sqrt());
    Ok(v)
}

// ---------------------------------------------------------------------------
// Several decay channels

/// Hermitian `H`, orthonormal channel states `|ψ_d^j>` and a common rate,
/// `D = Σ_j |ψ_d^j><ψ_d^j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSystem {
    hamiltonian: DMatrix<C64>,
    channels: Vec<DVector<C64>>,
    gamma: f64,
}

impl MultiChannelSystem {
    pub fn new(hamiltonian: DMatrix<C64>, channels: Vec<DVector<C64>>, gamma: f64) -> Result<Self> {
        check_hermitian(&hamiltonian)?;
        let n = hamiltonian.nrows();
        if channels.is_empty() {
            return Err(Error::invalid("at least one channel is required"));
        }
        if channels.iter().any(|v| v.len() != n) {
            return Err(Error::ShapeMismatch(format!("channel states must have length {n}")));
        }
        for (a, va) in channels.iter().enumerate() {
            for (b, vb) in channels.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                let dev = (va.dotc(vb) - want).norm();
                if dev > GRAM_TOL {
                    return Err(Error::invalid(format!(
                        "channels are not orthonormal: <{a}|{b}> deviates by {dev:e}"
                    )));
                }
            }
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { hamiltonian, channels, gamma })
    }

    /// Line of `l` sites with site channels given by 1-based labels.
    pub fn line(l: usize, hop: f64, sites: &[usize], gamma: f64) -> Result<Self> {
        if sites.iter().any(|&s| s == 0 || s > l) {
            return Err(Error::invalid(format!("channel sites must lie in 1..={l}")));
        }
        let channels = sites.iter().map(|&s| site(l, s - 1)).collect();
        Self::new(tight_binding_line(l, hop)?, channels, gamma)
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[DVector<C64>] {
        &self.channels
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.hamiltonian.clone(), self.channels.clone(), gamma)
    }

    /// `Σ_l rank[D P_l]` over the distinct levels of `H`.
    pub fn winding(&self) -> Result<usize> {
        let eigen = jacobi_eigh(&self.hamiltonian)?;
        let tol = default_degeneracy_tol(&eigen).max(f64::MIN_POSITIVE);
        let mut total = 0;
        for cluster in cluster_levels(&eigen, tol) {
            total += subspace_rank(&self.channels, &cluster.eigenvectors, 1e-12)?;
        }
        Ok(total)
    }

    /// The quantized value `w / (2 d Γ)` for the uniform mixture over channels.
    pub fn predicted_mixed_mean(&self) -> Result<f64> {
        Ok(self.winding()? as f64 / (2.0 * self.channels.len() as f64 * self.gamma))
    }
}

/// Anything that evolves under `exp(-iHt - ΓDt)`.
pub trait OpenSystem {
    fn hamiltonian(&self) -> &DMatrix<C64>;
    fn decay_channels(&self) -> Vec<DVector<C64>>;
    fn gamma(&self) -> f64;

    /// `A = -iH - ΓD`.
    fn generator(&self) -> DMatrix<C64> {
        effective_generator(self.hamiltonian(), &self.decay_channels(), self.gamma())
    }
}

impl OpenSystem for QuantumSystem {
    fn hamiltonian(&self) -> &DMatrix<C64> {
        QuantumSystem::hamiltonian(self)
    }
    fn decay_channels(&self) -> Vec<DVector<C64>> {
        vec![self.decay_state().clone()]
    }
    fn gamma(&self) -> f64 {
        QuantumSystem::gamma(self)
    }
}

impl OpenSystem for MultiChannelSystem {
    fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }
    fn decay_channels(&self) -> Vec<DVector<C64>> {
        self.channels.clone()
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
}

pub fn effective_generator(h: &DMatrix<C64>, channels: &[DVector<C64>], gamma: f64) -> DMatrix<C64> {
    let mut a = h * C64::new(0.0, -1.0);
    for v in channels {
        a -= (v * v.adjoint()) * c(gamma);
    }
    a
}

fn norm_one(a: &DMatrix<C64>) -> f64 {
    a.column_iter().map(|col| col.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(A)` by scaling and squaring a degree-18 Taylor polynomial, with the
/// scaled 1-norm below 0.5.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > SCALED_NORM { (norm / SCALED_NORM).log2().ceil() as i32 } else { 0 };
    let b = a * c(0.5f64.powi(squarings));
    let eye = DMatrix::<C64>::identity(n, n);
    let mut e = eye.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        e = &eye + (&b * e) * c(1.0 / k as f64);
    }
    for _ in 0..squarings {
        e = &e * &e;
    }
    e
}

/// `exp(-iHt - ΓDt) ψ`.
pub fn propagate<S: OpenSystem + ?Sized>(system: &S, initial: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be non-negative, got {t}")));
    }
    if initial.len() != system.hamiltonian().nrows() {
        return Err(Error::ShapeMismatch("initial state does not match the hamiltonian".into()));
    }
    let norm0 = initial.norm_squared();
    if (norm0.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm: norm0.sqrt() });
    }
    let out = expm(&(system.generator() * c(t))) * initial;
    let increase = out.norm_squared() - norm0;
    if increase > NORM_GROWTH_TOL {
        return Err(Error::NormIncrease { increase });
    }
    Ok(out)
}

/// How the system is prepared.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Pure(DVector<C64>),
    /// `ρ = D / d`, the uniform mixture over the decay channels.
    DecaySubspaceMixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMean {
    /// `∫F`.
    pub p_det: f64,
    /// `∫tF / ∫F`.
    pub mean: f64,
    pub survival: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub p_det: f64,
    pub mean: f64,
    /// One entry per pure component of the preparation.
    pub components: Vec<QuadratureMean>,
}

/// Integrate `F(t) = 2Γ Σ_j |<ψ_d^j|ψ(t)>|²` and `tF` along the propagated
/// state.
///
/// Time is cut into panels with `h‖A‖₁ <= 0.5`; the state is carried across
/// panels by a Taylor step and each panel is integrated by adaptive Simpson.
/// Integration stops once the survival probability falls below `1e-13`; if
/// `t_max` arrives first with survival above `1e-10` the slow modes need a
/// longer horizon and an error is returned.
pub fn mean_time_by_quadrature<S: OpenSystem + ?Sized>(
    system: &S,
    initial: &InitialState,
    t_max: f64,
) -> Result<QuadratureResult> {
    if !(t_max > 0.0) {
        return Err(Error::invalid(format!("t_max must be positive, got {t_max}")));
    }
    let states = match initial {
        InitialState::Pure(v) => vec![v.clone()],
        InitialState::DecaySubspaceMixed => system.decay_channels(),
    };
    let components = states
        .iter()
        .map(|v| pure_quadrature(system, v, t_max))
        .collect::<Result<Vec<_>>>()?;
    let d = components.len() as f64;
    let p_det = components.iter().map(|q| q.p_det).sum::<f64>() / d;
    let first = components.iter().map(|q| q.p_det * q.mean).sum::<f64>() / d;
    Ok(QuadratureResult { p_det, mean: first / p_det, components })
}

fn pure_quadrature<S: OpenSystem + ?Sized>(system: &S, initial: &DVector<C64>, t_max: f64) -> Result<QuadratureMean> {
    let norm0 = initial.norm();
    if (norm0 - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { norm: norm0 });
    }
    let a = system.generator();
    let channels = system.decay_channels();
    let gamma = system.gamma();
    let step = SCALED_NORM / norm_one(&a).max(f64::MIN_POSITIVE);
    let density = |v: &DVector<C64>| 2.0 * gamma * channels.iter().map(|ch| ch.dotc(v).norm_sqr()).sum::<f64>();

    let mut state = initial.clone();
    let mut t0 = 0.0;
    let mut integral = [0.0; 2];
    let mut survival = state.norm_squared();
    while t0 < t_max && survival > SURVIVAL_STOP {
        let h = step.min(t_max - t0);
        // A^k ψ / k!, so that ψ(t0 + τ) is a polynomial in τ.
        let mut taylor = Vec::with_capacity(TAYLOR_DEGREE + 1);
        taylor.push(state.clone());
        for k in 1..=TAYLOR_DEGREE {
            let next = (&a * &taylor[k - 1]) * c(1.0 / k as f64);
            taylor.push(next);
        }
        let at = |tau: f64| {
            let mut v = taylor[TAYLOR_DEGREE].clone();
            for coeff in taylor[..TAYLOR_DEGREE].iter().rev() {
                v *= c(tau);
                v += coeff;
            }
            v
        };
        // Panel tolerance scaled by the probability still to decay.
        let scale = PANEL_TOL * survival.max(1e-3) * h * gamma;
        let part = adaptive_simpson_many(
            &|tau: f64| {
                let f = density(&at(tau));
                [f, (t0 + tau) * f]
            },
            0.0,
            h,
            [scale, scale * (t0 + h)],
        );
        integral[0] += part[0];
        integral[1] += part[1];
        state = at(h);
        let next = state.norm_squared();
        if next - survival > NORM_GROWTH_TOL {
            return Err(Error::NormIncrease { increase: next - survival });
        }
        survival = next;
        t0 += h;
    }
    if survival > SURVIVAL_TOL {
        return Err(Error::SurvivalNotReached { survival });
    }
    Ok(QuadratureMean { p_det: integral[0], mean: integral[1] / integral[0], survival, horizon: t0 })
}

/// Spectral model of the ring used in the disorder experiments.
pub fn ring_model(l: usize, hop: f64, epsilon: f64, seed: u64) -> Result<SpectralModel> {
    spectral_model(&tight_binding_ring(l, hop, epsilon, seed, 1.0)?)
}
