//! Resolvent `R(s) = <ψ_d|(s + iH)^{-1}|ψ_d> = Σ_l p_l / (s + iE_l)`, the winding
//! curve `C(ΓR(iω))` and the two-dimensional electrostatic potential whose
//! stationary points are the poles of the Laplace-domain amplitude.

use std::f64::consts::{E, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::spectral::{SpectralModel, C64};

const POLE_GUARD: f64 = 1e-300;
/// Frequencies this close to `-E_l` take the limit value of the winding map.
const POLE_SNAP: f64 = 1e-9;
const REFINE_BUDGET: usize = 1_000_000;
const MAX_ARG_STEP: f64 = FRAC_PI_2;

/// Pairwise (cascade) summation of `f(lo..hi)`.
fn pairwise_sum<F: Fn(usize) -> C64>(lo: usize, hi: usize, f: &F) -> C64 {
    match hi - lo {
        0 => C64::new(0.0, 0.0),
        1 => f(lo),
        2 => f(lo) + f(lo + 1),
        n => {
            let mid = lo + n / 2;
            pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f)
        }
    }
}

fn pole_offsets(model: &SpectralModel, s: C64) -> Result<Vec<C64>> {
    model
        .levels()
        .iter()
        .enumerate()
        .map(|(index, l)| {
            let d = s + C64::new(0.0, l.energy);
            if d.norm() <= POLE_GUARD {
                Err(Error::AtPole { index, energy: l.energy })
            } else {
                Ok(d)
            }
        })
        .collect()
}

pub fn resolvent_at(model: &SpectralModel, s: C64) -> Result<C64> {
    let d = pole_offsets(model, s)?;
    let levels = model.levels();
    Ok(pairwise_sum(0, d.len(), &|k| levels[k].overlap / d[k]))
}

/// `R'(s) = -Σ_l p_l / (s + iE_l)^2`.
pub fn resolvent_derivative(model: &SpectralModel, s: C64) -> Result<C64> {
    let d = pole_offsets(model, s)?;
    let levels = model.levels();
    Ok(-pairwise_sum(0, d.len(), &|k| levels[k].overlap / (d[k] * d[k])))
}

/// `C(z) = M(z) e^{M(z)}` with the Möbius map `M(z) = (z - 1)/(z + 1)`.
pub fn winding_map(z: C64) -> Result<C64> {
    let denom = z + 1.0;
    if denom.norm() == 0.0 {
        return Err(Error::invalid("winding map has a pole at z = -1"));
    }
    if !z.is_finite() {
        return Ok(C64::new(E, 0.0));
    }
    let m = (z - 1.0) / denom;
    Ok(m * m.exp())
}

/// Sampled image of the imaginary axis under `C(ΓR(·))` with its winding number.
///
/// `omegas` runs from `-∞` to `+∞`; both endpoints map to `C(0) = -1/e`, so the
/// curve is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingCurve {
    pub omegas: Vec<f64>,
    pub curve_points: Vec<C64>,
    pub winding: i64,
    /// Distance of the accumulated turns from the nearest integer.
    pub arg_residual: f64,
}

impl WindingCurve {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Largest absolute argument change between neighbouring samples.
    pub fn max_arg_step(&self) -> f64 {
        self.curve_points
            .windows(2)
            .map(|p| (p[1] / p[0]).arg().abs())
            .fold(0.0, f64::max)
    }
}

fn curve_at(model: &SpectralModel, gamma: f64, theta: f64) -> Result<(f64, C64)> {
    if theta <= -FRAC_PI_2 {
        return Ok((f64::NEG_INFINITY, C64::new(-1.0 / E, 0.0)));
    }
    if theta >= FRAC_PI_2 {
        return Ok((f64::INFINITY, C64::new(-1.0 / E, 0.0)));
    }
    let omega = theta.tan();
    if model.levels().iter().any(|l| (omega + l.energy).abs() < POLE_SNAP) {
        return Ok((omega, C64::new(E, 0.0)));
    }
    let z = resolvent_at(model, C64::new(0.0, omega))? * gamma;
    // ΓR(iω) is purely imaginary; drop rounding noise in the real part.
    Ok((omega, winding_map(C64::new(0.0, z.im))?))
}

/// Frequencies every sampling must contain so that no loop of the curve can
/// fall between two samples.
///
/// On the imaginary axis `ΓR(iω) = -iΓ h(ω)` with `h(ω) = Σ p_l / (ω + E_l)`
/// decreasing between poles, so each gap carries one full turn of `C`. The
/// poles themselves and the points where `Γh = 1, 0, -1` split every turn into
/// pieces of at most `π/2 + 1` radians.
fn anchor_frequencies(model: &SpectralModel, gamma: f64) -> Vec<f64> {
    let mut poles: Vec<f64> = model.levels().iter().map(|l| -l.energy).collect();
    poles.sort_by(f64::total_cmp);
    let h = |w: f64| gamma * model.levels().iter().map(|l| l.overlap / (w + l.energy)).sum::<f64>();
    // h decreases on (lo, hi): bisect for h = target.
    let solve = |mut lo: f64, mut hi: f64, target: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let first = poles[0];
    let last = poles[poles.len() - 1];
    // Outer gaps: widen until the bracket holds the level set.
    let reach = |target: f64, below: bool| {
        let mut d = 1.0 + model.span();
        for _ in 0..2000 {
            let edge = if below { first - d } else { last + d };
            let hit = if below { h(edge) >= target } else { h(edge) <= target };
            if hit {
                return Some(if below { solve(edge, first, target) } else { solve(last, edge, target) });
            }
            d *= 2.0;
        }
        None
    };
    let mut out = poles.clone();
    out.extend(reach(-1.0, true));
    out.extend(reach(1.0, false));
    for pair in poles.windows(2) {
        for target in [1.0, 0.0, -1.0] {
            out.push(solve(pair[0], pair[1], target));
        }
    }
    out.retain(|w| w.is_finite());
    out
}

/// Winding number of `C(ΓR(iω))` around the origin, reported with positive sign.
///
/// The frequency axis is compactified by `ω = tan θ`. Starting from
/// `init_points` uniform samples in `θ` plus anchor frequencies at the poles
/// and inside every gap, segments are bisected until every
/// argument step is below `π/2`, and the unwrapped argument is accumulated.
pub fn compute_winding(model: &SpectralModel, gamma: f64, init_points: usize) -> Result<WindingCurve> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if init_points < 64 {
        return Err(Error::invalid(format!("need at least 64 initial points, got {init_points}")));
    }
    let mut thetas: Vec<f64> = (0..=init_points)
        .map(|k| -FRAC_PI_2 + PI * k as f64 / init_points as f64)
        .chain(anchor_frequencies(model, gamma).into_iter().map(f64::atan))
        .collect();
    thetas.sort_by(f64::total_cmp);
    thetas.dedup();
    let mut initial = Vec::with_capacity(thetas.len());
    for &t in &thetas {
        initial.push((t, curve_at(model, gamma, t)?));
    }

    let mut omegas = vec![initial[0].1 .0];
    let mut points = vec![initial[0].1 .1];
    let mut total_arg = 0.0;

    // Depth-first refinement keeps the output ordered in θ.
    let mut stack: Vec<((f64, C64), (f64, C64))> = initial
        .windows(2)
        .rev()
        .map(|w| ((w[0].0, w[0].1 .1), (w[1].0, w[1].1 .1)))
        .collect();
    while let Some(((ta, ca), (tb, cb))) = stack.pop() {
        let step = (cb / ca).arg();
        if step.abs() < MAX_ARG_STEP {
            let omega_b = if tb >= FRAC_PI_2 { f64::INFINITY } else { tb.tan() };
            omegas.push(omega_b);
            points.push(cb);
            total_arg += step;
            continue;
        }
        if omegas.len() + stack.len() >= REFINE_BUDGET {
            return Err(Error::RefinementBudget { budget: REFINE_BUDGET });
        }
        let tm = 0.5 * (ta + tb);
        let (_, cm) = curve_at(model, gamma, tm)?;
        stack.push(((tm, cm), (tb, cb)));
        stack.push(((ta, ca), (tm, cm)));
    }

    let turns = -total_arg / (2.0 * PI);
    let winding = turns.round();
    Ok(WindingCurve {
        omegas,
        curve_points: points,
        winding: winding as i64,
        arg_residual: (turns - winding).abs(),
    })
}

/// `V(x, y) = x/Γ + Σ_l p_l ln(√(x² + (y + E_l)²) / Γ)`: a constant force plus
/// point charges `p_l` at `(0, -E_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub model: SpectralModel,
    pub gamma: f64,
}

impl PotentialField {
    pub fn new(model: SpectralModel, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
        }
        Ok(Self { model, gamma })
    }

    fn squared_distances(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        self.model
            .levels()
            .iter()
            .enumerate()
            .map(|(index, l)| {
                let r2 = x * x + (y + l.energy) * (y + l.energy);
                if r2 <= POLE_GUARD {
                    Err(Error::AtPole { index, energy: l.energy })
                } else {
                    Ok(r2)
                }
            })
            .collect()
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64> {
        let r2 = self.squared_distances(x, y)?;
        let charges: f64 = self
            .model
            .levels()
            .iter()
            .zip(&r2)
            .map(|(l, &d)| l.overlap * (0.5 * d.ln() - self.gamma.ln()))
            .sum();
        Ok(x / self.gamma + charges)
    }

    /// `(∂V/∂x, ∂V/∂y)`; `∂_x V - i ∂_y V = 1/Γ + R(x + iy)`.
    pub fn gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let r2 = self.squared_distances(x, y)?;
        let mut gx = 1.0 / self.gamma;
        let mut gy = 0.0;
        for (l, &d) in self.model.levels().iter().zip(&r2) {
            gx += l.overlap * x / d;
            gy += l.overlap * (y + l.energy) / d;
        }
        Ok((gx, gy))
    }
}

pub fn potential_value(field: &PotentialField, x: f64, y: f64) -> Result<f64> {
    field.value(x, y)
}

pub fn potential_gradient(field: &PotentialField, x: f64, y: f64) -> Result<(f64, f64)> {
    field.gradient(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Level;
    use approx::assert_relative_eq;

    fn single() -> SpectralModel {
        SpectralModel::new(vec![Level::new(0.0, 1.0)], 1e-9, 1e-12).unwrap()
    }

    fn two_level(delta: f64, omega: f64) -> SpectralModel {
        let root = (delta * delta / 4.0 + omega * omega).sqrt();
        // p_± = |<e|E_±>|² for H = [[δ/2, Ω], [Ω, -δ/2]].
        let p_plus = 0.5 * (1.0 + delta / 2.0 / root);
        SpectralModel::new(
            vec![Level::new(-root, 1.0 - p_plus), Level::new(root, p_plus)],
            1e-12,
            1e-14,
        )
        .unwrap()
    }

    #[test]
    fn single_level_resolvent() {
        let r = resolvent_at(&single(), C64::new(1.0, 0.0)).unwrap();
        assert_eq!(r, C64::new(1.0, 0.0));
        let d = resolvent_derivative(&single(), C64::new(1.0, 0.0)).unwrap();
        assert_eq!(d, C64::new(-1.0, 0.0));
    }

    #[test]
    fn two_level_resolvent_closed_form() {
        let m = two_level(1.0, 1.0);
        let r = resolvent_at(&m, C64::new(1.0, 0.0)).unwrap();
        let want = C64::new(1.0, -0.5) / 2.25;
        assert!((r - want).norm() < 1e-14);
    }

    #[test]
    fn resolvent_pole_is_an_error() {
        let m = two_level(1.0, 1.0);
        let e = m.levels()[1].energy;
        let err = resolvent_at(&m, C64::new(0.0, -e)).unwrap_err();
        assert_eq!(err, Error::AtPole { index: 1, energy: e });
        assert!(resolvent_derivative(&m, C64::new(0.0, -e)).is_err());
    }

    #[test]
    fn imaginary_axis_maps_to_imaginary_axis() {
        let m = two_level(0.7, 0.3);
        for w in [-3.0, -0.1, 0.0, 0.2, 5.0] {
            let r = resolvent_at(&m, C64::new(0.0, w)).unwrap();
            assert!(r.re.abs() < 1e-14);
        }
    }

    #[test]
    fn winding_map_values() {
        assert!((winding_map(C64::new(0.0, 0.0)).unwrap() + 1.0 / E).norm() < 1e-15);
        assert_eq!(winding_map(C64::new(1.0, 0.0)).unwrap(), C64::new(0.0, 0.0));
        let far = winding_map(C64::new(0.0, 1e12)).unwrap();
        assert!((far - E).norm() < 1e-10);
        assert!(winding_map(C64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn single_level_winds_once() {
        for gamma in [1e-3, 1.0, 1e3] {
            let curve = compute_winding(&single(), gamma, 64).unwrap();
            assert_eq!(curve.winding, 1);
            assert!(curve.arg_residual < 1e-6);
            assert!(curve.max_arg_step() < FRAC_PI_2);
        }
    }

    #[test]
    fn close_levels_are_not_skipped() {
        // Twelve levels 0.03 apart fit inside one coarse sampling interval.
        let levels = (0..12).map(|k| Level::new(1.0 + 0.03 * k as f64, 1.0 / 12.0)).collect();
        let model = SpectralModel::new(levels, 1e-12, 1e-14).unwrap();
        for gamma in [1e-3, 1.0, 1e3] {
            assert_eq!(compute_winding(&model, gamma, 64).unwrap().winding, 12);
        }
    }

    #[test]
    fn winding_needs_enough_points() {
        assert!(compute_winding(&single(), 1.0, 10).is_err());
        assert!(compute_winding(&single(), -1.0, 100).is_err());
    }

    #[test]
    fn curve_is_closed_at_minus_inverse_e() {
        let curve = compute_winding(&two_level(0.5, 0.1), 1.0, 64).unwrap();
        assert_eq!(curve.winding, 2);
        let first = curve.curve_points[0];
        let last = *curve.curve_points.last().unwrap();
        assert_eq!(first, last);
        assert_relative_eq!(first.re, -1.0 / E);
        assert_eq!(curve.omegas[0], f64::NEG_INFINITY);
        assert_eq!(*curve.omegas.last().unwrap(), f64::INFINITY);
    }

    #[test]
    fn single_charge_stationary_point() {
        let field = PotentialField::new(single(), 1.0).unwrap();
        let (gx, gy) = field.gradient(-1.0, 0.0).unwrap();
        assert!(gx.abs() < 1e-15 && gy.abs() < 1e-15);
        assert_relative_eq!(field.value(1.0, 0.0).unwrap(), 1.0);
        assert!(field.value(0.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_charges_give_symmetric_potential() {
        let m = SpectralModel::new(vec![Level::new(-1.0, 0.5), Level::new(1.0, 0.5)], 1e-9, 1e-12)
            .unwrap();
        let field = PotentialField::new(m, 2.0).unwrap();
        for (x, y) in [(-0.3, 0.7), (1.2, -2.0), (-4.0, 0.1)] {
            assert_relative_eq!(field.value(x, y).unwrap(), field.value(x, -y).unwrap(), epsilon = 1e-14);
        }
    }
}
