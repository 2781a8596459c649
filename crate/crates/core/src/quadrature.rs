//! Adaptive Simpson quadrature, scalar and for several integrands sharing one
//! set of abscissae.
//!
//! Used only as an independent check of the closed-form pole sums and for
//! direct time-domain integration of propagated states.

const MAX_DEPTH: u32 = 48;

/// Integrate `K` functions evaluated together, refining until every component's
/// local error estimate is below its share of `tol[k]`.
pub fn adaptive_simpson_many<const K: usize, F>(f: &F, a: f64, b: f64, tol: [f64; K]) -> [f64; K]
where
    F: Fn(f64) -> [f64; K],
{
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, &fa, &fm, &fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_many(&|t| [f(t)], a, b, [tol])[0]
}

/// Split `[a, b]` into `panels` equal pieces, each integrated adaptively with
/// a proportional share of `tol`.
pub fn panel_simpson_many<const K: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    panels: usize,
    tol: [f64; K],
) -> [f64; K]
where
    F: Fn(f64) -> [f64; K],
{
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let share = tol.map(|t| t / panels as f64);
    let mut total = [0.0; K];
    for p in 0..panels {
        let lo = a + h * p as f64;
        let hi = if p + 1 == panels { b } else { lo + h };
        let part = adaptive_simpson_many(f, lo, hi, share);
        for k in 0..K {
            total[k] += part[k];
        }
    }
    total
}

fn simpson<const K: usize>(a: f64, b: f64, fa: &[f64; K], fm: &[f64; K], fb: &[f64; K]) -> [f64; K] {
    let w = (b - a) / 6.0;
    std::array::from_fn(|k| w * (fa[k] + 4.0 * fm[k] + fb[k]))
}

#[allow(clippy::too_many_arguments)]
fn recurse<const K: usize, F>(
    f: &F,
    a: f64,
    b: f64,
    fa: [f64; K],
    fm: [f64; K],
    fb: [f64; K],
    whole: [f64; K],
    tol: [f64; K],
    depth: u32,
) -> [f64; K]
where
    F: Fn(f64) -> [f64; K],
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, &fa, &flm, &fm);
    let right = simpson(m, b, &fm, &frm, &fb);
    let converged = (0..K).all(|k| (left[k] + right[k] - whole[k]).abs() <= 15.0 * tol[k]);
    if depth == 0 || converged {
        // Richardson (Lyness) correction.
        return std::array::from_fn(|k| {
            let two = left[k] + right[k];
            two + (two - whole[k]) / 15.0
        });
    }
    let half = tol.map(|t| 0.5 * t);
    let l = recurse(f, a, m, fa, flm, fm, left, half, depth - 1);
    let r = recurse(f, m, b, fm, frm, fb, right, half, depth - 1);
    std::array::from_fn(|k| l[k] + r[k])
}
