//! Poles `s_{p,l}` of `Ψ(s) = R(s) / (1 + ΓR(s))` and their residual
//! coefficients `r_l = R(s_p) / R'(s_p)`.
//!
//! The poles solve `1/Γ + R(s) = 0`. Clearing denominators gives the monic
//! degree-`w` polynomial
//!
//! ```text
//! P(s) = Π_l (s + iE_l) + Γ Σ_l p_l Π_{l' != l} (s + iE_l')
//! ```
//!
//! whose roots are found simultaneously by Aberth–Ehrlich iteration and then
//! polished by Newton's method on the rational form, which stays well
//! conditioned when levels cluster.
//!
//! The `asymptotic_*` functions give the leading-order pole positions in the
//! four limits where poles approach the imaginary axis or run off to `-∞`:
//! weak dissipation, strong dissipation, a vanishing overlap and a nearly
//! degenerate cluster of levels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resolvent::{resolvent_at, resolvent_derivative};
use crate::spectral::{Level, SpectralModel, C64};

const ABERTH_MAX_ITER: usize = 500;
const NEWTON_MAX_ITER: usize = 40;
const DUPLICATE_REL_TOL: f64 = 1e-12;

fn i() -> C64 {
    C64::new(0.0, 1.0)
}

/// Complex polynomial with coefficients in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<C64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<C64>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `s^k`.
    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn eval(&self, s: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// `(P(s), P'(s))` by a single Horner pass.
    /// `Σ|c_k| r^k`, the scale of the rounding error in [`Self::eval`] at `|s| = r`.
    pub fn eval_bound(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
    }

    pub fn eval_with_derivative(&self, s: C64) -> (C64, C64) {
        let mut p = C64::new(0.0, 0.0);
        let mut dp = C64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * s + p;
            p = p * s + c;
        }
        (p, dp)
    }

    fn mul_linear(&self, root_shift: C64) -> Self {
        // (Σ a_k s^k)(s + root_shift)
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + 1];
        for (k, &a) in self.coeffs.iter().enumerate() {
            out[k] += a * root_shift;
            out[k + 1] += a;
        }
        Self { coeffs: out }
    }

    fn add_scaled(&self, other: &Self, scale: C64) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|k| self.coeff(k) + other.coeff(k) * scale).collect();
        Self { coeffs }
    }
}

/// Monic numerator polynomial of `1 + ΓR(s)`, built by incremental convolution.
pub fn characteristic_polynomial(model: &SpectralModel, gamma: f64) -> Polynomial {
    let one = Polynomial::new(vec![C64::new(1.0, 0.0)]);
    let mut product = one;
    let mut weighted = Polynomial::new(vec![]);
    for level in model.levels() {
        let shift = C64::new(0.0, level.energy);
        weighted = weighted.mul_linear(shift).add_scaled(&product, C64::new(level.overlap, 0.0));
        product = product.mul_linear(shift);
    }
    product.add_scaled(&weighted, C64::new(gamma, 0.0))
}

/// Poles and residual coefficients of `Ψ(s)` for one model and decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    pub poles: Vec<C64>,
    pub residuals: Vec<C64>,
    pub gamma: f64,
    pub model: SpectralModel,
}

/// Measured deviations from the exact-pole invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleDiagnostics {
    /// `max_l |1 + ΓR(s_l)|`.
    pub max_pole_residual: f64,
    /// The scale `max(1, Γ max p / min gap)` the pole residual is compared with.
    pub residual_scale: f64,
    /// `|Σ r_l - Γ| / Γ`.
    pub residual_sum_error: f64,
    /// `max_l |r_l - R/R'| / |r_l|`.
    pub max_residue_mismatch: f64,
    pub max_real_part: f64,
}

impl PoleDiagnostics {
    /// Whether every exact-pole invariant holds at its stated tolerance.
    pub fn is_exact(&self) -> bool {
        self.max_pole_residual < 1e-10 * self.residual_scale
            && self.residual_sum_error < 1e-8
            && self.max_residue_mismatch < 1e-10
            && self.max_real_part < 0.0
    }
}

impl PoleSet {
    pub fn from_parts(poles: Vec<C64>, residuals: Vec<C64>, gamma: f64, model: SpectralModel) -> Self {
        Self { poles, residuals, gamma, model }
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// `(pole, residual)` pairs.
    pub fn modes(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.poles.iter().copied().zip(self.residuals.iter().copied())
    }

    pub fn diagnostics(&self) -> Result<PoleDiagnostics> {
        let model = &self.model;
        let gamma = self.gamma;
        let mut max_pole_residual: f64 = 0.0;
        let mut max_residue_mismatch: f64 = 0.0;
        for (s, r) in self.modes() {
            let rv = resolvent_at(model, s)?;
            let dr = resolvent_derivative(model, s)?;
            max_pole_residual = max_pole_residual.max((1.0 + gamma * rv).norm());
            max_residue_mismatch = max_residue_mismatch.max((r - rv / dr).norm() / r.norm());
        }
        let sum: C64 = self.residuals.iter().sum();
        let min_gap = model.min_gap();
        let residual_scale = if min_gap.is_finite() {
            (gamma * model.max_overlap() / min_gap).max(1.0)
        } else {
            1.0
        };
        Ok(PoleDiagnostics {
            max_pole_residual,
            residual_scale,
            residual_sum_error: (sum - gamma).norm() / gamma,
            max_residue_mismatch,
            max_real_part: self.poles.iter().map(|s| s.re).fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Index of the pole closest to `s`.
    pub fn nearest(&self, s: C64) -> usize {
        let mut best = 0;
        for (k, p) in self.poles.iter().enumerate() {
            if (p - s).norm() < (self.poles[best] - s).norm() {
                best = k;
            }
        }
        best
    }
}

fn tolerance_scale(model: &SpectralModel, gamma: f64) -> f64 {
    model.span() + gamma
}

fn initial_guesses(model: &SpectralModel, gamma: f64, poly: &Polynomial) -> Vec<C64> {
    let w = model.winding();
    if gamma * model.max_overlap() < model.min_gap() {
        return asymptotic_poles_small_gamma(model, gamma).poles;
    }
    let radius = 2.0 * (model.max_abs_energy() + gamma);
    let center = -poly.coeff(w - 1) / w as f64;
    (0..w)
        .map(|k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / w as f64 + 0.4))
        .collect()
}

/// Aberth–Ehrlich simultaneous root iteration (Gauss–Seidel ordering).
///
/// A root is frozen once `|P(z)|` is within the rounding error of Horner's
/// rule, `ε Σ|c_k||z|^k`; the loop ends when every root is frozen or no step
/// exceeds rounding size.
fn aberth(poly: &Polynomial, mut roots: Vec<C64>, scale: f64) -> Result<Vec<C64>> {
    let n = roots.len();
    let mut frozen = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            if frozen[k] {
                continue;
            }
            let z = roots[k];
            let (p, dp) = poly.eval_with_derivative(z);
            if p.norm() <= 8.0 * f64::EPSILON * poly.eval_bound(z.norm()) {
                frozen[k] = true;
                continue;
            }
            let repulsion: C64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z - roots[j])).sum();
            let step = 1.0 / (dp / p - repulsion);
            if step.is_finite() {
                roots[k] = z - step;
                max_step = max_step.max(step.norm());
            }
        }
        if frozen.iter().all(|&f| f) || max_step <= 4.0 * f64::EPSILON * scale {
            return Ok(roots);
        }
    }
    let worst_residual = roots.iter().map(|&z| poly.eval(z).norm()).fold(0.0, f64::max);
    Err(Error::RootNoConvergence { iterations: ABERTH_MAX_ITER, worst_residual })
}

/// Newton iteration on `f(s) = 1/Γ + R(s)`; returns the iterate with smallest `|f|`.
fn newton_polish(model: &SpectralModel, gamma: f64, start: C64) -> Result<C64> {
    let target = 1e-13 / gamma;
    let mut s = start;
    let mut best = (s, (1.0 / gamma + resolvent_at(model, s)?).norm());
    for _ in 0..NEWTON_MAX_ITER {
        let f = 1.0 / gamma + resolvent_at(model, s)?;
        let fnorm = f.norm();
        if fnorm < best.1 {
            best = (s, fnorm);
        }
        if fnorm <= target {
            break;
        }
        let step = f / resolvent_derivative(model, s)?;
        if !step.is_finite() || step.norm() <= 2.0 * f64::EPSILON * s.norm() {
            break;
        }
        s -= step;
    }
    let f = (1.0 / gamma + resolvent_at(model, s)?).norm();
    if f < best.1 {
        best = (s, f);
    }
    Ok(best.0)
}

fn sort_poles(pairs: &mut [(C64, C64)]) {
    pairs.sort_by(|a, b| a.0.im.total_cmp(&b.0.im).then(a.0.re.total_cmp(&b.0.re)));
}

/// All `w` poles of `Ψ(s)` with residual coefficients.
pub fn find_poles(model: &SpectralModel, gamma: f64) -> Result<PoleSet> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    let poly = characteristic_polynomial(model, gamma);
    let scale = tolerance_scale(model, gamma);
    let raw = aberth(&poly, initial_guesses(model, gamma, &poly), scale)?;

    let mut polished = Vec::with_capacity(raw.len());
    for (k, &z) in raw.iter().enumerate() {
        let nearest_other = raw
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &o)| (o - z).norm())
            .fold(f64::INFINITY, f64::min);
        let s = newton_polish(model, gamma, z)?;
        // A polish that wanders toward a neighbouring root is discarded.
        polished.push(if (s - z).norm() < 0.5 * nearest_other { s } else { z });
    }

    for a in 0..polished.len() {
        for b in (a + 1)..polished.len() {
            let distance = (polished[a] - polished[b]).norm();
            if distance < DUPLICATE_REL_TOL * scale {
                return Err(Error::DuplicateRoots { first: a, second: b, distance });
            }
        }
    }

    let mut pairs = Vec::with_capacity(polished.len());
    for s in polished {
        let r = resolvent_at(model, s)? / resolvent_derivative(model, s)?;
        pairs.push((s, r));
    }
    sort_poles(&mut pairs);
    let (poles, residuals) = pairs.into_iter().unzip();
    Ok(PoleSet { poles, residuals, gamma, model: model.clone() })
}

/// Weak dissipation: `s_l ~ -iE_l - p_l Γ`, `r_l ~ p_l Γ`.
pub fn asymptotic_poles_small_gamma(model: &SpectralModel, gamma: f64) -> PoleSet {
    let (poles, residuals) = model
        .levels()
        .iter()
        .map(|l| (C64::new(-l.overlap * gamma, -l.energy), C64::new(l.overlap * gamma, 0.0)))
        .unzip();
    PoleSet { poles, residuals, gamma, model: model.clone() }
}

/// Real zeros `ω` of `h(ω) = Σ_l p_l / (E_l - ω)` strictly between adjacent
/// levels, so that `R(-iω) = -i h(ω) = 0`. Each gap holds exactly one zero
/// because `h` increases from `-∞` to `+∞` across it.
pub fn resolvent_zeros(levels: &[Level]) -> Result<Vec<f64>> {
    let h = |w: f64| -> (f64, f64) {
        levels.iter().fold((0.0, 0.0), |(v, d), l| {
            let x = l.energy - w;
            (v + l.overlap / x, d + l.overlap / (x * x))
        })
    };
    let mut zeros = Vec::with_capacity(levels.len().saturating_sub(1));
    for k in 0..levels.len().saturating_sub(1) {
        let (mut lo, mut hi) = (levels[k].energy, levels[k + 1].energy);
        if !(hi > lo) {
            return Err(Error::BracketFailure { lower: k, upper: k + 1 });
        }
        let mut w = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (v, d) = h(w);
            if v == 0.0 {
                break;
            }
            if v < 0.0 {
                lo = w;
            } else {
                hi = w;
            }
            let newton = w - v / d;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - w).abs() <= 2.0 * f64::EPSILON * w.abs().max(f64::MIN_POSITIVE)
                || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs())
            {
                w = next;
                break;
            }
            w = next;
        }
        if !(w > levels[k].energy && w < levels[k + 1].energy) {
            return Err(Error::BracketFailure { lower: k, upper: k + 1 });
        }
        zeros.push(w);
    }
    Ok(zeros)
}

/// Strong dissipation: one fast mode `-Γ - i<H>` with `r ~ Γ`, and `w - 1` slow
/// modes near the resolvent zeros, `s ~ -iω - 1/(Γ R'(-iω))`,
/// `r ~ -1/(Γ R'(-iω))`.
pub fn asymptotic_poles_large_gamma(model: &SpectralModel, gamma: f64) -> Result<PoleSet> {
    let mut pairs = vec![(C64::new(-gamma, -model.mean_energy()), C64::new(gamma, 0.0))];
    for w in resolvent_zeros(model.levels())? {
        let slope: f64 = model
            .levels()
            .iter()
            .map(|l| l.overlap / ((l.energy - w) * (l.energy - w)))
            .sum();
        let shift = 1.0 / (gamma * slope);
        pairs.push((C64::new(-shift, -w), C64::new(-shift, 0.0)));
    }
    sort_poles(&mut pairs);
    let (poles, residuals) = pairs.into_iter().unzip();
    Ok(PoleSet { poles, residuals, gamma, model: model.clone() })
}

/// Vanishing overlap at `level_index`: `s ~ -iE_l - p_l / E_BG(-iE_l)` and
/// `r ~ p_l / (Γ E_BG(-iE_l)^2)`, where `E_BG` is the field of the constant force
/// and all other charges.
pub fn asymptotic_pole_small_charge(
    model: &SpectralModel,
    gamma: f64,
    level_index: usize,
) -> Result<(C64, C64)> {
    let levels = model.levels();
    let level = levels.get(level_index).ok_or_else(|| {
        Error::invalid(format!("level index {level_index} out of range for {} levels", levels.len()))
    })?;
    let at = C64::new(0.0, -level.energy);
    let background: C64 = C64::new(1.0 / gamma, 0.0)
        + levels
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != level_index)
            .map(|(_, l)| l.overlap / (at + i() * l.energy))
            .sum::<C64>();
    let pole = at - level.overlap / background;
    let residual = level.overlap / (gamma * background * background);
    Ok((pole, residual))
}

/// A cluster of nearly degenerate levels `Ē + ε Ē_l` with overlaps `p_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct NearDegenerateCluster {
    pub center: f64,
    pub offsets: Vec<f64>,
    pub overlaps: Vec<f64>,
}

/// Approximate degeneracy: the `W - 1` emergent slow poles of a cluster of `W`
/// levels split linearly in `ε`,
/// `s ~ -i(Ē + εω̃) - ε² E_rest(-iĒ) / R̃'(-iω̃)` and `r ~ -ε² / (Γ R̃'(-iω̃))`,
/// where `-iω̃` are the zeros of the cluster resolvent
/// `R̃(s) = Σ p_l / (s + iĒ_l)` and `E_rest` is the constant force plus the
/// background charges. Poles of the background itself are not returned.
pub fn asymptotic_poles_near_degenerate(
    cluster: &NearDegenerateCluster,
    background: &[Level],
    gamma: f64,
    epsilon: f64,
) -> Result<Vec<(C64, C64)>> {
    if cluster.offsets.len() != cluster.overlaps.len() {
        return Err(Error::ShapeMismatch("cluster offsets and overlaps differ in length".into()));
    }
    if cluster.offsets.len() < 2 {
        return Err(Error::invalid("a near-degenerate cluster needs at least two levels"));
    }
    let mut scaled: Vec<Level> = cluster
        .offsets
        .iter()
        .zip(&cluster.overlaps)
        .map(|(&e, &p)| Level::new(e, p))
        .collect();
    scaled.sort_by(|a, b| a.energy.total_cmp(&b.energy));

    let at = C64::new(0.0, -cluster.center);
    let rest: C64 = C64::new(1.0 / gamma, 0.0)
        + background.iter().map(|l| l.overlap / (at + i() * l.energy)).sum::<C64>();

    let eps2 = epsilon * epsilon;
    resolvent_zeros(&scaled)?
        .into_iter()
        .map(|w| {
            let slope: f64 = scaled
                .iter()
                .map(|l| l.overlap / ((l.energy - w) * (l.energy - w)))
                .sum();
            let pole = C64::new(0.0, -(cluster.center + epsilon * w)) - eps2 * rest / slope;
            let residual = C64::new(-eps2 / (gamma * slope), 0.0);
            Ok((pole, residual))
        })
        .collect()
}
