//! Dissipation-time statistics from a [`PoleSet`].
//!
//! With `Ψ(t) = (1/Γ) Σ r_l e^{s_l t}` the decay density is `F(t) = 2Γ|Ψ(t)|²`
//! and every moment is a closed-form double sum over pairs of poles,
//!
//! ```text
//! <T^m> = (2/Γ) Σ_{l,l'} m! r_l r_l'^* / (-s_l - s_l'^*)^{m+1}.
//! ```
//!
//! Conditioning on events before a cut-off `Θ` replaces the `m = 0, 1` sums by
//! their truncated versions. Quadrature of `t^m F(t)` is kept as an
//! independent oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poles::{resolvent_zeros, PoleSet};
use crate::quadrature::panel_simpson_many;
use crate::spectral::{SpectralModel, C64};

/// Relative size of the imaginary part tolerated in a moment sum.
const MOMENT_IMAG_TOL: f64 = 1e-10;
/// Below this `|ΘS|` the conditional-mean brackets are summed as series.
const SERIES_RADIUS: f64 = 0.5;
/// Tail bound used for the quadrature horizon.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTimeStats {
    pub p_det: f64,
    pub mean: f64,
    pub variance: f64,
    /// `<T^m>` for `m = 0..moments.len()`.
    pub moments: Vec<f64>,
}

impl DecayTimeStats {
    /// Moments up to and including `max_order` (at least 2).
    pub fn from_poles(poles: &PoleSet, max_order: usize) -> Result<Self> {
        let moments = (0..=max_order.max(2))
            .map(|m| moment(poles, m))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            p_det: moments[0],
            mean: moments[1],
            variance: moments[2] - moments[1] * moments[1],
            moments,
        })
    }
}

/// `Ψ(t) = <ψ_d|ψ(t)>`.
pub fn wavefunction_at(poles: &PoleSet, t: f64) -> C64 {
    poles.modes().map(|(s, r)| r * (s * t).exp()).sum::<C64>() / poles.gamma
}

/// `F(t) = 2Γ|Ψ(t)|²`.
pub fn decay_density(poles: &PoleSet, t: f64) -> f64 {
    2.0 * poles.gamma * wavefunction_at(poles, t).norm_sqr()
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|k| k as f64).product()
}

/// `<T^m>` from the residue double sum. The sum is real for exact pole sets;
/// a sizeable imaginary part means the pole set is inconsistent and is
/// reported instead of dropped.
pub fn moment(poles: &PoleSet, m: usize) -> Result<f64> {
    let mut sum = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    let power = (m + 1) as i32;
    for (s1, r1) in poles.modes() {
        for (s2, r2) in poles.modes() {
            let term = r1 * r2.conj() / (-s1 - s2.conj()).powi(power);
            sum += term;
            scale += term.norm();
        }
    }
    let prefactor = 2.0 * factorial(m) / poles.gamma;
    if sum.im.abs() > MOMENT_IMAG_TOL * scale {
        return Err(Error::ComplexMoment { imag: prefactor * sum.im, scale: prefactor * scale });
    }
    Ok(prefactor * sum.re)
}

pub fn detection_probability(poles: &PoleSet) -> Result<f64> {
    moment(poles, 0)
}

pub fn mean(poles: &PoleSet) -> Result<f64> {
    moment(poles, 1)
}

pub fn variance(poles: &PoleSet) -> Result<f64> {
    let m1 = moment(poles, 1)?;
    Ok(moment(poles, 2)? - m1 * m1)
}

/// The quantized mean `w / (2Γ)`.
pub fn predicted_mean(w: usize, gamma: f64) -> f64 {
    w as f64 / (2.0 * gamma)
}

/// `(e^z - 1) / z`.
fn bracket_first(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        // Σ z^k / (k+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..24 {
            term *= z / (k + 1) as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `(1 - (1 - z) e^z) / z²`.
fn bracket_second(z: C64) -> C64 {
    if z.norm() < SERIES_RADIUS {
        // Σ_{k>=2} (k-1) z^{k-2} / k!
        let mut power = C64::new(1.0, 0.0);
        let mut fact = 2.0;
        let mut sum = C64::new(0.5, 0.0);
        for k in 3..26 {
            power *= z;
            fact *= k as f64;
            sum += power * ((k - 1) as f64 / fact);
        }
        sum
    } else {
        (1.0 - (1.0 - z) * z.exp()) / (z * z)
    }
}

/// Truncated normalisation `∫_0^Θ F` and first moment `∫_0^Θ tF`.
pub fn truncated_moments(poles: &PoleSet, theta: f64) -> (f64, f64) {
    let mut norm = C64::new(0.0, 0.0);
    let mut first = C64::new(0.0, 0.0);
    for (s1, r1) in poles.modes() {
        for (s2, r2) in poles.modes() {
            let weight = r1 * r2.conj();
            let z = theta * (s1 + s2.conj());
            norm += weight * theta * bracket_first(z);
            first += weight * theta * theta * bracket_second(z);
        }
    }
    let prefactor = 2.0 / poles.gamma;
    (prefactor * norm.re, prefactor * first.re)
}

/// Mean over events recorded before `theta`.
pub fn conditional_mean(poles: &PoleSet, theta: f64) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::invalid(format!("observation time must be positive and finite, got {theta}")));
    }
    let (norm, first) = truncated_moments(poles, theta);
    if !(norm.abs() >= 1e-300) {
        return Err(Error::VanishingNormalization { value: norm });
    }
    Ok(first / norm)
}

/// A stretch of observation times over which `2Γ<T_c>` sits on an integer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub level: i64,
    pub theta_start: f64,
    pub theta_end: f64,
}

impl Plateau {
    pub fn decades(&self) -> f64 {
        (self.theta_end / self.theta_start).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeanCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// Every plateau spanning at least a decade.
    pub plateaus: Vec<Plateau>,
    /// Longest plateau below the fully resolved value, if any.
    pub w_apparent: Option<i64>,
}

/// Half-width of the band around an integer that counts as a plateau.
pub const PLATEAU_BAND: f64 = 0.05;

impl ConditionalMeanCurve {
    pub fn compute(poles: &PoleSet, thetas: &[f64]) -> Result<Self> {
        let values = thetas
            .iter()
            .map(|&t| conditional_mean(poles, t))
            .collect::<Result<Vec<_>>>()?;
        let resolved = (2.0 * poles.gamma * moment(poles, 1)?).round() as i64;
        let plateaus = find_plateaus(thetas, &values, poles.gamma);
        let w_apparent = plateaus
            .iter()
            .filter(|p| p.level < resolved)
            .max_by(|a, b| a.decades().total_cmp(&b.decades()))
            .map(|p| p.level);
        Ok(Self { thetas: thetas.to_vec(), values, plateaus, w_apparent })
    }
}

/// Maximal runs of consecutive `thetas` with `|2Γv - k| < PLATEAU_BAND` for a
/// common integer `k`, kept when they span at least a decade.
pub fn find_plateaus(thetas: &[f64], values: &[f64], gamma: f64) -> Vec<Plateau> {
    let level = |v: f64| {
        let x = 2.0 * gamma * v;
        let k = x.round();
        ((x - k).abs() < PLATEAU_BAND).then_some(k as i64)
    };
    let mut out = Vec::new();
    let mut run: Option<(i64, usize)> = None;
    let close = |run: Option<(i64, usize)>, end: usize, out: &mut Vec<Plateau>| {
        if let Some((k, start)) = run {
            let p = Plateau { level: k, theta_start: thetas[start], theta_end: thetas[end] };
            if p.decades() >= 1.0 {
                out.push(p);
            }
        }
    };
    for (idx, &v) in values.iter().enumerate() {
        let k = level(v);
        match (run, k) {
            (Some((current, _)), Some(k)) if current == k => {}
            (_, k) => {
                if idx > 0 {
                    close(run, idx - 1, &mut out);
                }
                run = k.map(|k| (k, idx));
            }
        }
    }
    if !values.is_empty() {
        close(run, values.len() - 1, &mut out);
    }
    out
}

/// A slow mode written as `Re s = -ε s̄`, `r = ε r̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowMode {
    pub rate: f64,
    pub residual: C64,
}

/// The `count` poles closest to the imaginary axis, rescaled by `epsilon`.
pub fn slow_modes(poles: &PoleSet, count: usize, epsilon: f64) -> Vec<SlowMode> {
    let mut modes: Vec<(C64, C64)> = poles.modes().collect();
    modes.sort_by(|a, b| b.0.re.total_cmp(&a.0.re));
    modes
        .into_iter()
        .take(count)
        .map(|(s, r)| SlowMode { rate: -s.re / epsilon, residual: r / epsilon })
        .collect()
}

/// `g(x) = (4/W) Σ |r̄|²/(4s̄²) {1 - (1 + 2s̄x) e^{-2s̄x}}` over `W` slow modes.
pub fn scaling_function(slow: &[SlowMode], x: f64) -> f64 {
    if slow.is_empty() {
        return 0.0;
    }
    let sum: f64 = slow
        .iter()
        .map(|m| {
            let a = 2.0 * m.rate * x;
            // 1 - (1 + a) e^{-a}, with the small-a cancellation avoided.
            let bracket = if a < 1e-3 {
                a * a * (0.5 - a / 3.0 + a * a / 8.0)
            } else {
                -(-a).exp_m1() - a * (-a).exp()
            };
            m.residual.norm_sqr() / (4.0 * m.rate * m.rate) * bracket
        })
        .sum();
    4.0 / slow.len() as f64 * sum
}

/// `w_app/(2Γ) + (w - w_app)/(2Γ) g`.
pub fn crossover_prediction(w: usize, w_app: usize, gamma: f64, g_of_x: f64) -> f64 {
    (w_app as f64 + (w as f64 - w_app as f64) * g_of_x) / (2.0 * gamma)
}

/// Weak-dissipation expansion
/// `P_det ~ 1 + Σ_{l != l'} 2Γ p p' / ((p + p')Γ + i(E - E'))`.
pub fn detection_probability_small_gamma(model: &SpectralModel, gamma: f64) -> f64 {
    let levels = model.levels();
    let mut sum = C64::new(0.0, 0.0);
    for (a, la) in levels.iter().enumerate() {
        for (b, lb) in levels.iter().enumerate() {
            if a != b {
                let den = C64::new((la.overlap + lb.overlap) * gamma, la.energy - lb.energy);
                sum += 2.0 * gamma * la.overlap * lb.overlap / den;
            }
        }
    }
    1.0 + sum.re
}

/// Strong-dissipation expansion in terms of the resolvent zeros `ω_l` and
/// `λ_l = 1 / R'(-iω_l)`:
///
/// ```text
/// P_det ~ 1 - Re Σ_l 4λ_l / (Γ² + λ_l + iΓ(ω_l - ω_0))
///           + Σ_{l,l'} 2λ_l λ_l' / ((λ_l + λ_l')Γ² + iΓ³(ω_l - ω_l'))
/// ```
///
/// with `ω_0 = <ψ_d|H|ψ_d>`.
pub fn detection_probability_large_gamma(model: &SpectralModel, gamma: f64) -> Result<f64> {
    let levels = model.levels();
    let omega0 = model.mean_energy();
    let zeros = resolvent_zeros(levels)?;
    let lambdas: Vec<f64> = zeros
        .iter()
        .map(|&w| {
            let slope: f64 = levels.iter().map(|l| l.overlap / ((l.energy - w) * (l.energy - w))).sum();
            1.0 / slope
        })
        .collect();
    let g2 = gamma * gamma;
    let mut cross = 0.0;
    for (&w, &lam) in zeros.iter().zip(&lambdas) {
        cross += (4.0 * lam / C64::new(g2 + lam, gamma * (w - omega0))).re;
    }
    let mut slow = C64::new(0.0, 0.0);
    for (&w1, &l1) in zeros.iter().zip(&lambdas) {
        for (&w2, &l2) in zeros.iter().zip(&lambdas) {
            slow += 2.0 * l1 * l2 / C64::new((l1 + l2) * g2, gamma * g2 * (w1 - w2));
        }
    }
    Ok(1.0 - cross + slow.re)
}

/// Time after which `∫_T^∞ t^m F` is bounded by `tol`, using
/// `|Ψ(t)|² <= (Σ|r_l|/Γ)² e^{2at}` with `a = max Re s_l`. Capped at `1e12/Γ`.
pub fn quadrature_horizon(poles: &PoleSet, m: usize, tol: f64) -> f64 {
    let gamma = poles.gamma;
    let cap = 1e12 / gamma;
    let a = poles.poles.iter().map(|s| s.re).fold(f64::NEG_INFINITY, f64::max);
    if !(a < 0.0) {
        return cap;
    }
    let amp: f64 = poles.residuals.iter().map(|r| r.norm()).sum::<f64>() / gamma;
    let b = -2.0 * a;
    // ∫_T^∞ t^m e^{-bt} = e^{-bT} Σ_k m!/k! T^k / b^{m-k+1}
    let tail = |t: f64| {
        let poly: f64 = (0..=m)
            .map(|k| factorial(m) / factorial(k) * t.powi(k as i32) / b.powi((m - k + 1) as i32))
            .sum();
        2.0 * gamma * amp * amp * (-b * t).exp() * poly
    };
    let mut hi = 1.0 / b;
    while tail(hi) > tol {
        hi *= 2.0;
        if hi >= cap {
            return cap;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Panels of width about a quarter of the fastest oscillation or decay.
fn panel_count(poles: &PoleSet, horizon: f64) -> usize {
    let mut fastest: f64 = 0.0;
    for s1 in &poles.poles {
        for s2 in &poles.poles {
            fastest = fastest.max((s1 + s2.conj()).norm());
        }
    }
    ((horizon * fastest / 2.0).ceil() as usize).clamp(8, 400_000)
}

/// `∫_0^T t^m F(t) dt` for `m = 0, 1, 2` by adaptive Simpson, with `T` from
/// [`quadrature_horizon`]. A first pass fixes the magnitudes, a second one
/// integrates to `rel_tol` relative to them.
pub fn moments_by_quadrature(poles: &PoleSet, rel_tol: f64) -> [f64; 3] {
    let horizon = (0..3).map(|m| quadrature_horizon(poles, m, TAIL_TOL)).fold(0.0, f64::max);
    let panels = panel_count(poles, horizon);
    let integrand = |t: f64| {
        let f = decay_density(poles, t);
        [f, t * f, t * t * f]
    };
    let rough = panel_simpson_many(&integrand, 0.0, horizon, panels, [1e-6, 1e-6, 1e-6]);
    let tol = rough.map(|v| (v.abs() * rel_tol).max(f64::MIN_POSITIVE));
    panel_simpson_many(&integrand, 0.0, horizon, panels, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poles::find_poles;
    use crate::spectral::Level;
    use approx::assert_relative_eq;

    fn model(levels: &[(f64, f64)]) -> SpectralModel {
        SpectralModel::new(levels.iter().map(|&(e, p)| Level::new(e, p)).collect(), 1e-12, 1e-14)
            .unwrap()
    }

    fn two_level(delta: f64, omega: f64, gamma: f64) -> PoleSet {
        // H = [[δ/2, Ω], [Ω, -δ/2]], ψ_d = (1, 0).
        let e = 0.5 * (delta * delta + 4.0 * omega * omega).sqrt();
        let p_plus = 0.5 * (1.0 + 0.5 * delta / e);
        find_poles(&model(&[(-e, 1.0 - p_plus), (e, p_plus)]), gamma).unwrap()
    }

    #[test]
    fn single_level_moments() {
        let poles = find_poles(&model(&[(0.3, 1.0)]), 1.0).unwrap();
        let stats = DecayTimeStats::from_poles(&poles, 3).unwrap();
        assert_relative_eq!(stats.p_det, 1.0, epsilon = 1e-12);
        assert_relative_eq!(stats.mean, 0.5, epsilon = 1e-12);
        assert_relative_eq!(stats.variance, 0.25, epsilon = 1e-12);
        // <T^3> = 3!/(2Γ)^3
        assert_relative_eq!(stats.moments[3], 0.75, epsilon = 1e-12);
        let psi = wavefunction_at(&poles, 2.0);
        assert_relative_eq!(psi.re, ((C64::new(-1.0, -0.3)) * 2.0).exp().re, epsilon = 1e-12);
        assert_relative_eq!(decay_density(&poles, 0.0), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_level_mean_and_variance() {
        let poles = two_level(0.5, 0.1, 1.0);
        assert_relative_eq!(wavefunction_at(&poles, 0.0).re, 1.0, epsilon = 1e-10);
        assert_relative_eq!(mean(&poles).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(variance(&poles).unwrap(), 63.5, max_relative = 1e-9);
    }

    #[test]
    fn brackets_agree_across_series_switch() {
        for &z in &[C64::new(-0.49, 0.1), C64::new(-0.3, -0.39), C64::new(0.0, 0.499)] {
            let direct1 = (z.exp() - 1.0) / z;
            let direct2 = (1.0 - (1.0 - z) * z.exp()) / (z * z);
            assert!((bracket_first(z) - direct1).norm() < 1e-13);
            assert!((bracket_second(z) - direct2).norm() < 1e-10);
        }
        assert!((bracket_second(C64::new(1e-9, 0.0)) - 0.5).norm() < 1e-9);
    }

    #[test]
    fn conditional_mean_limits() {
        let poles = two_level(0.5, 0.1, 1.0);
        let big = conditional_mean(&poles, 1e6).unwrap();
        assert_relative_eq!(big, 1.0, max_relative = 1e-6);
        // Short windows see a uniform density: <T_c> -> Θ/2.
        let tiny = conditional_mean(&poles, 1e-6).unwrap();
        assert_relative_eq!(tiny, 0.5e-6, max_relative = 1e-5);
        assert!(conditional_mean(&poles, 0.0).is_err());
    }

    #[test]
    fn conditional_mean_against_quadrature() {
        let poles = find_poles(&model(&[(-1.0, 0.3), (0.2, 0.5), (1.5, 0.2)]), 0.7).unwrap();
        let theta = 3.7;
        let [n, f, _] = panel_simpson_many(
            &|t: f64| {
                let v = decay_density(&poles, t);
                [v, t * v, 0.0]
            },
            0.0,
            theta,
            64,
            [1e-13, 1e-13, 1.0],
        );
        assert_relative_eq!(conditional_mean(&poles, theta).unwrap(), f / n, max_relative = 1e-9);
    }

    #[test]
    fn plateau_detection() {
        let poles = two_level(0.5, 0.01, 1.0);
        let thetas: Vec<f64> = (0..=90).map(|k| 10f64.powf(-1.0 + 9.0 * k as f64 / 90.0)).collect();
        let curve = ConditionalMeanCurve::compute(&poles, &thetas).unwrap();
        assert_eq!(curve.w_apparent, Some(1));
        assert!(curve.plateaus.iter().any(|p| p.level == 2));
    }

    #[test]
    fn scaling_function_two_level_form() {
        let (gamma, delta): (f64, f64) = (1.0, 0.5);
        let rate = gamma / (gamma * gamma + delta * delta);
        let slow = [SlowMode { rate, residual: C64::new(0.6, -0.8) * rate }];
        assert_eq!(scaling_function(&slow, 0.0), 0.0);
        assert_relative_eq!(scaling_function(&slow, 1e6), 1.0, epsilon = 1e-12);
        for &x in &[1e-4, 0.3, 2.0, 17.0] {
            let a = 2.0 * gamma * x / (gamma * gamma + delta * delta);
            let want = 1.0 - (1.0 + a) * (-a).exp();
            assert_relative_eq!(scaling_function(&slow, x), want, max_relative = 1e-9);
        }
        assert_relative_eq!(crossover_prediction(2, 1, 1.0, 0.0), 0.5);
        assert_relative_eq!(crossover_prediction(2, 1, 1.0, 1.0), 1.0);
    }

    #[test]
    fn two_level_slow_mode_scaling_function() {
        let (delta, omega) = (0.5, 0.01);
        let poles = two_level(delta, omega, 1.0);
        let slow = slow_modes(&poles, 1, omega * omega);
        assert_relative_eq!(slow[0].rate, 1.0 / 1.25, max_relative = 1e-3);
        assert_relative_eq!(scaling_function(&slow, 1e5), 1.0, max_relative = 1e-3);
    }

    #[test]
    fn predicted_means() {
        assert_eq!(predicted_mean(2, 1.0), 1.0);
        assert_eq!(predicted_mean(1, 1.0), 0.5);
        assert_eq!(predicted_mean(4, 4.0), 0.5);
    }

    #[test]
    fn quadrature_matches_residues() {
        let poles = find_poles(&model(&[(-1.0, 0.3), (0.2, 0.5), (1.5, 0.2)]), 0.7).unwrap();
        let q = moments_by_quadrature(&poles, 1e-9);
        for m in 0..3 {
            assert_relative_eq!(q[m], moment(&poles, m).unwrap(), max_relative = 1e-7);
        }
    }

    #[test]
    fn detection_expansions() {
        let m = model(&[(-1.0, 0.3), (0.2, 0.5), (1.5, 0.2)]);
        let gamma = 1e-3;
        let approx = crate::poles::asymptotic_poles_small_gamma(&m, gamma);
        let want = detection_probability(&approx).unwrap() - 1.0;
        let got = detection_probability_small_gamma(&m, gamma) - 1.0;
        assert_relative_eq!(got, want, max_relative = 1e-9);

        let gamma = 1e3;
        let approx = crate::poles::asymptotic_poles_large_gamma(&m, gamma).unwrap();
        let want = detection_probability(&approx).unwrap() - 1.0;
        let got = detection_probability_large_gamma(&m, gamma).unwrap() - 1.0;
        assert_relative_eq!(got, want, max_relative = 1e-6);
    }
}
