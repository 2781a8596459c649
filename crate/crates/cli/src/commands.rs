use std::path::Path;

use dissipation::io::SystemSpec;
use dissipation::models::{
    mean_time_by_quadrature, tight_binding_line, tight_binding_ring, two_level_conditional_mean_asymptotic,
    two_level_system, two_level_variance, two_site_state, InitialState, MultiChannelSystem, TwoLevelParams,
};
use dissipation::poles::find_poles;
use dissipation::resolvent::{compute_winding, PotentialField};
use dissipation::spectral::spectral_model;
use dissipation::stats::{decay_density, predicted_mean, wavefunction_at, ConditionalMeanCurve, DecayTimeStats};
use dissipation::{QuantumSystem, SpectralModel, C64};
use nalgebra::DVector;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::args::{Command, ModelKind, Params};
use crate::output::{Failure, Report};
use crate::sweep::Sweep;

const DEFAULT_GAMMA: f64 = 1.0;
const DEFAULT_DELTA: f64 = 0.5;
const DEFAULT_OMEGA: f64 = 0.1;
const DEFAULT_L: usize = 6;
const DEFAULT_T_MAX: f64 = 1e8;

pub fn run(command: &Command, p: &Params) -> Result<Report, Failure> {
    match command {
        Command::Winding(_) => winding(p),
        Command::Poles(_) => poles(p),
        Command::Spectrum(_) => spectrum(p),
        Command::DecayDist(_) => decay_dist(p),
        Command::Moments(_) => moments(p),
        Command::ConditionalMean(_) => conditional_mean(p),
        Command::TwoLevel(_) => two_level(p),
        Command::Ring(_) => ring(p),
        Command::LineMultichannel(_) => line_multichannel(p),
        Command::PrepSweep(_) => prep_sweep(p),
    }
}

fn sweep(text: Option<&str>, fallback: &str) -> Result<Vec<f64>, Failure> {
    let s: Sweep = text.unwrap_or(fallback).parse().map_err(Failure::Usage)?;
    Ok(s.values)
}

fn gamma(p: &Params) -> f64 {
    p.gamma.unwrap_or(DEFAULT_GAMMA)
}

fn two_level_params(p: &Params, omega: f64, gamma: f64) -> dissipation::Result<TwoLevelParams> {
    TwoLevelParams::new(p.delta.unwrap_or(DEFAULT_DELTA), omega, gamma)
}

fn system(p: &Params) -> Result<QuantumSystem, Failure> {
    let g = gamma(p);
    let l = p.l.unwrap_or(DEFAULT_L);
    let sys = match p.model.unwrap_or(ModelKind::SingleLevel) {
        ModelKind::SingleLevel => {
            let h = nalgebra::DMatrix::from_element(1, 1, C64::new(p.energy.unwrap_or(0.0), 0.0));
            QuantumSystem::new(h, DVector::from_element(1, C64::new(1.0, 0.0)), g)?
        }
        ModelKind::TwoLevel => two_level_system(two_level_params(p, p.omega.unwrap_or(DEFAULT_OMEGA), g)?)?,
        ModelKind::Ring => {
            tight_binding_ring(l, p.hop.unwrap_or(1.0), p.eps.unwrap_or(0.0), p.seed.unwrap_or(0), g)?
        }
        ModelKind::Line => {
            let site = p.sites.as_ref().and_then(|s| s.first().copied()).unwrap_or(l);
            if site == 0 || site > l {
                return Err(Failure::Usage(format!("decay site {site} outside 1..={l}")));
            }
            let mut psi = DVector::zeros(l);
            psi[site - 1] = C64::new(1.0, 0.0);
            QuantumSystem::new(tight_binding_line(l, p.hop.unwrap_or(1.0))?, psi, g)?
        }
        ModelKind::File => {
            let spec = read_spec(p.system.as_deref())?;
            let sys = spec.to_system()?;
            match p.gamma {
                Some(g) => sys.with_gamma(g)?,
                None => sys,
            }
        }
    };
    Ok(sys)
}

fn read_spec(path: Option<&Path>) -> Result<SystemSpec, Failure> {
    let path = path.ok_or_else(|| Failure::Usage("--model file needs --system <path>".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(SystemSpec::from_json(&text)?)
}

fn model_and_gamma(p: &Params) -> Result<(SpectralModel, f64), Failure> {
    let sys = system(p)?;
    Ok((spectral_model(&sys)?, sys.gamma()))
}

fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

fn winding(p: &Params) -> Result<Report, Failure> {
    let (model, g) = model_and_gamma(p)?;
    let curve = compute_winding(&model, g, p.init_points.unwrap_or(64))?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(curve.winding));
    summary.insert("levels".into(), json!(model.winding()));
    summary.insert("arg_residual".into(), json!(curve.arg_residual));
    summary.insert("samples".into(), json!(curve.len()));
    let rows = curve
        .omegas
        .iter()
        .zip(&curve.curve_points)
        .filter(|(w, z)| w.is_finite() && z.re.is_finite() && z.im.is_finite())
        .map(|(&w, z)| vec![w, z.re, z.im])
        .collect();
    Ok(Report::new(summary, &["omega", "re", "im"], rows))
}

fn poles(p: &Params) -> Result<Report, Failure> {
    let (model, g) = model_and_gamma(p)?;
    let set = find_poles(&model, g)?;
    let d = set.diagnostics()?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(set.len()));
    summary.insert("gamma".into(), json!(g));
    summary.insert("poles".into(), Value::Array(set.poles.iter().map(|&s| pair(s)).collect()));
    summary.insert("residuals".into(), Value::Array(set.residuals.iter().map(|&r| pair(r)).collect()));
    summary.insert(
        "charges".into(),
        Value::Array(model.levels().iter().map(|l| json!({"position": -l.energy, "charge": l.overlap})).collect()),
    );
    summary.insert(
        "diagnostics".into(),
        json!({
            "exact": d.is_exact(),
            "max_pole_residual": d.max_pole_residual,
            "residual_scale": d.residual_scale,
            "residual_sum_error": d.residual_sum_error,
            "max_residue_mismatch": d.max_residue_mismatch,
            "max_real_part": d.max_real_part,
        }),
    );
    if let Some(n) = p.grid {
        summary.insert("potential".into(), potential_grid(&model, g, &set.poles, n.max(2))?);
    }
    let rows = set.modes().map(|(s, r)| vec![s.re, s.im, r.re, r.im]).collect();
    Ok(Report::new(summary, &["re", "im", "residual_re", "residual_im"], rows))
}

/// Potential sampled on the left half plane around the poles. Points that land
/// on a pole are written as null.
fn potential_grid(model: &SpectralModel, g: f64, poles: &[C64], n: usize) -> Result<Value, Failure> {
    let field = PotentialField::new(model.clone(), g)?;
    let deepest = poles.iter().map(|s| s.re).fold(0.0, f64::min).min(-1e-3);
    let reach = model.max_abs_energy() + 0.5 * g.min(1.0) + 0.5;
    let (x0, x1) = (1.5 * deepest, 0.02 * deepest);
    let xs: Vec<f64> = (0..n).map(|k| x0 + (x1 - x0) * k as f64 / (n - 1) as f64).collect();
    let ys: Vec<f64> = (0..n).map(|k| -reach + 2.0 * reach * k as f64 / (n - 1) as f64).collect();
    let values: Vec<Value> = ys
        .iter()
        .map(|&y| Value::Array(xs.iter().map(|&x| field.value(x, y).ok().map_or(Value::Null, |v| json!(v))).collect()))
        .collect();
    Ok(json!({"x": xs, "y": ys, "values": values}))
}

fn spectrum(p: &Params) -> Result<Report, Failure> {
    let (model, _) = model_and_gamma(p)?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(model.winding()));
    summary.insert("discarded_overlap".into(), json!(model.discarded_overlap()));
    summary.insert("mean_energy".into(), json!(model.mean_energy()));
    let rows = model.levels().iter().map(|l| vec![l.energy, l.overlap]).collect();
    Ok(Report::new(summary, &["energy", "overlap"], rows))
}

fn decay_dist(p: &Params) -> Result<Report, Failure> {
    let (model, g) = model_and_gamma(p)?;
    let set = find_poles(&model, g)?;
    let ts = sweep(p.t_sweep.as_deref(), &format!("0:{}:201", 10.0 / g))?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(set.len()));
    let rows = ts
        .iter()
        .map(|&t| vec![t, decay_density(&set, t), wavefunction_at(&set, t).norm_sqr()])
        .collect();
    Ok(Report::new(summary, &["t", "density", "amplitude_sq"], rows))
}

fn moments(p: &Params) -> Result<Report, Failure> {
    let (model, g) = model_and_gamma(p)?;
    let set = find_poles(&model, g)?;
    let stats = DecayTimeStats::from_poles(&set, p.max_order.unwrap_or(4))?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(set.len()));
    summary.insert("p_det".into(), json!(stats.p_det));
    summary.insert("mean".into(), json!(stats.mean));
    summary.insert("variance".into(), json!(stats.variance));
    summary.insert("scaled_mean".into(), json!(2.0 * g * stats.mean));
    summary.insert("predicted_mean".into(), json!(predicted_mean(set.len(), g)));
    summary.insert("moments".into(), json!(stats.moments));
    let rows = stats.moments.iter().enumerate().map(|(m, &v)| vec![m as f64, v]).collect();
    Ok(Report::new(summary, &["order", "moment"], rows))
}

fn conditional_mean(p: &Params) -> Result<Report, Failure> {
    let (model, g) = model_and_gamma(p)?;
    let set = find_poles(&model, g)?;
    let thetas = sweep(p.theta_sweep.as_deref(), &format!("log:{}:{}:201", 1e-2 / g, 1e8 / g))?;
    let curve = ConditionalMeanCurve::compute(&set, &thetas)?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(set.len()));
    summary.insert("w_apparent".into(), json!(curve.w_apparent));
    summary.insert("plateaus".into(), serde_json::to_value(&curve.plateaus).expect("plateaus serialise"));
    let two_level = match p.model {
        Some(ModelKind::TwoLevel) => Some(two_level_params(p, p.omega.unwrap_or(DEFAULT_OMEGA), g)?),
        _ => None,
    };
    let mut columns = vec!["theta", "mean_c", "scaled"];
    if two_level.is_some() {
        columns.push("asymptotic");
    }
    let rows = curve
        .thetas
        .iter()
        .zip(&curve.values)
        .map(|(&t, &v)| {
            let mut row = vec![t, v, 2.0 * g * v];
            if let Some(tp) = two_level {
                row.push(two_level_conditional_mean_asymptotic(tp, t));
            }
            row
        })
        .collect();
    Ok(Report::new(summary, &columns, rows))
}

fn two_level(p: &Params) -> Result<Report, Failure> {
    let g = gamma(p);
    let fallback = p.omega.map_or_else(|| "0.05:1.5:30".to_string(), |o| o.to_string());
    let omegas = sweep(p.omega_sweep.as_deref(), &fallback)?;
    let rows = omegas
        .par_iter()
        .map(|&omega| -> Result<Vec<f64>, Failure> {
            let tp = two_level_params(p, omega, g)?;
            let set = find_poles(&spectral_model(&two_level_system(tp)?)?, g)?;
            let stats = DecayTimeStats::from_poles(&set, 2)?;
            Ok(vec![omega, stats.mean, 2.0 * g * stats.mean, stats.variance, two_level_variance(tp), stats.p_det])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(2));
    summary.insert("predicted_mean".into(), json!(predicted_mean(2, g)));
    Ok(Report::new(summary, &["omega", "mean", "scaled_mean", "variance", "variance_closed", "p_det"], rows))
}

fn ring(p: &Params) -> Result<Report, Failure> {
    let g = gamma(p);
    let l = p.l.unwrap_or(DEFAULT_L);
    let hop = p.hop.unwrap_or(1.0);
    let seed = p.seed.unwrap_or(0);
    let fallback = p.eps.unwrap_or(0.0).to_string();
    let eps = sweep(p.eps_sweep.as_deref(), &fallback)?;
    let init = p.init_points.unwrap_or(64);
    let rows = eps
        .par_iter()
        .map(|&e| -> Result<Vec<f64>, Failure> {
            let model = spectral_model(&tight_binding_ring(l, hop, e, seed, g)?)?;
            let w = compute_winding(&model, g, init)?.winding;
            let set = find_poles(&model, g)?;
            let stats = DecayTimeStats::from_poles(&set, 2)?;
            let slowest = set.poles.iter().map(|s| -s.re).fold(f64::INFINITY, f64::min);
            Ok(vec![e, w as f64, 2.0 * g * stats.mean, slowest, stats.p_det])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Map::new();
    summary.insert("L".into(), json!(l));
    Ok(Report::new(summary, &["eps", "w", "scaled_mean", "slowest_rate", "p_det"], rows))
}

fn line_multichannel(p: &Params) -> Result<Report, Failure> {
    let l = p.l.unwrap_or(DEFAULT_L);
    let hop = p.hop.unwrap_or(1.0);
    let sites = p.sites.clone().unwrap_or_else(|| vec![1, 2, 4]);
    let fallback = p.gamma.map_or_else(|| "log:0.01:100:9".to_string(), |g| g.to_string());
    let gammas = sweep(p.gamma_sweep.as_deref(), &fallback)?;
    let t_max = p.t_max.unwrap_or(DEFAULT_T_MAX);
    let reference = MultiChannelSystem::line(l, hop, &sites, 1.0)?;
    let w = reference.winding()?;
    let d = sites.len();
    let rows = gammas
        .par_iter()
        .map(|&g| -> Result<Vec<f64>, Failure> {
            let sys = reference.with_gamma(g)?;
            let q = mean_time_by_quadrature(&sys, &InitialState::DecaySubspaceMixed, t_max)?;
            let mut row = vec![g, g * q.mean, q.p_det];
            row.extend(q.components.iter().map(|c| g * c.mean));
            Ok(row)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let channel_cols: Vec<String> = (1..=d).map(|k| format!("gamma_mean_ch{k}")).collect();
    let mut columns = vec!["gamma", "gamma_mean", "p_det"];
    columns.extend(channel_cols.iter().map(String::as_str));
    let mut summary = Map::new();
    summary.insert("w".into(), json!(w));
    summary.insert("d".into(), json!(d));
    summary.insert("sites".into(), json!(sites));
    summary.insert("predicted_gamma_mean".into(), json!(w as f64 / (2.0 * d as f64)));
    Ok(Report::new(summary, &columns, rows))
}

fn prep_sweep(p: &Params) -> Result<Report, Failure> {
    let l = p.l.unwrap_or(DEFAULT_L);
    let hop = p.hop.unwrap_or(1.0);
    let eps = p.eps.unwrap_or(0.0);
    let seed = p.seed.unwrap_or(0);
    let (primary, secondary) = match p.sites.as_deref() {
        None => (l, l / 2),
        Some([a, b]) => (*a, *b),
        Some(_) => return Err(Failure::Usage("prep-sweep takes --sites primary,secondary".into())),
    };
    let deltas = sweep(p.delta_sweep.as_deref(), "log:0.01:0.1:3")?;
    let fallback = p.gamma.map_or_else(|| "log:0.01:1:3".to_string(), |g| g.to_string());
    let gammas = sweep(p.gamma_sweep.as_deref(), &fallback)?;
    let t_max = p.t_max.unwrap_or(DEFAULT_T_MAX);
    let w = spectral_model(&tight_binding_ring(l, hop, eps, seed, 1.0)?)?.winding();
    let grid: Vec<(f64, f64)> = deltas.iter().flat_map(|&a| gammas.iter().map(move |&g| (a, g))).collect();
    let rows = grid
        .par_iter()
        .map(|&(a, g)| -> Result<Vec<f64>, Failure> {
            let sys = tight_binding_ring(l, hop, eps, seed, g)?;
            let state = two_site_state(l, primary, secondary, a)?;
            let q = mean_time_by_quadrature(&sys, &InitialState::Pure(state), t_max)?;
            let scaled = 2.0 * g * q.mean;
            Ok(vec![a, g, scaled, q.p_det, (scaled - w as f64).abs()])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut summary = Map::new();
    summary.insert("w".into(), json!(w));
    summary.insert("sites".into(), json!([primary, secondary]));
    Ok(Report::new(summary, &["delta", "gamma", "scaled_mean", "p_det", "deviation"], rows))
}
