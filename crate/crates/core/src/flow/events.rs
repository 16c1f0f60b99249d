use super::{integrate_flow, FlowError, FlowOptions, FlowResult, LeafCrossing};
use crate::geometry::{ManifoldSpec, ScalarField, VectorField};
use crate::sampling::sample_points;
use rayon::prelude::*;
use serde::Serialize;

pub type ReturnEvent = LeafCrossing;

/// Crossings of the base leaf `h = h(p₀)` recorded along `flow`, excluding
/// the start itself.
pub fn leaf_return_events(m: &ManifoldSpec, flow: &FlowResult) -> Result<Vec<ReturnEvent>, FlowError> {
    if m.leaf_function().is_none() {
        return Err(FlowError::NoLeafFunction);
    }
    Ok(flow.crossings.iter().filter(|c| c.time != 0.0).cloned().collect())
}

/// Newton projection of `x` onto `h = h0` along the coordinate gradient.
pub fn project_to_leaf(h: &ScalarField, h0: f64, x: &[f64]) -> Option<Vec<f64>> {
    let mut y = x.to_vec();
    for _ in 0..40 {
        let r = h.value(&y).ok()? - h0;
        if r.abs() <= 1e-13 * h0.abs().max(1.0) {
            return Some(y);
        }
        let d = h.partials(&y).ok()?;
        let d2: f64 = d.iter().map(|v| v * v).sum();
        if !(d2 > 0.0) {
            return None;
        }
        for (yi, di) in y.iter_mut().zip(&d) {
            *yi -= r * di / d2;
        }
    }
    None
}

/// Points on the leaf through `p0`: the base point followed by projected
/// quasi-random points of the sample box. At most `count` points.
pub fn leaf_samples(m: &ManifoldSpec, p0: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>, FlowError> {
    let h = m.leaf_function().ok_or(FlowError::NoLeafFunction)?;
    let h0 = h.value(p0).map_err(|e| FlowError::LeafFunction(e.to_string()))?;
    let mut out = vec![p0.to_vec()];
    for s in sample_points(&m.domain, 8 * count.max(1), seed) {
        if out.len() >= count {
            break;
        }
        let Some(q) = project_to_leaf(h, h0, &s.coords) else {
            continue;
        };
        if m.domain.admissible(&q) && out.iter().all(|o| linf(o, &q) > 1e-9) {
            out.push(q);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonodromySample {
    pub start: Vec<f64>,
    /// Refined return time nearest `t0`, if the trajectory returned.
    pub return_time: Option<f64>,
    pub end: Option<Vec<f64>>,
    /// Chart distance modulo identifications; infinite when no return.
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monodromy {
    pub identity: bool,
    pub t0: f64,
    pub tolerance: f64,
    pub max_displacement: f64,
    pub mean_displacement: f64,
    pub max_return_time_spread: f64,
    pub samples: Vec<MonodromySample>,
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Max-norm distance with periodic coordinates compared modulo their period.
fn periodic_distance(periods: &[Option<f64>], a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(periods)
        .map(|((x, y), p)| {
            let d = x - y;
            match p {
                Some(p) => (d - p * (d / p).round()).abs(),
                None => d.abs(),
            }
        })
        .fold(0.0, f64::max)
}

/// Max-norm chart distance modulo identifications: the minimum over
/// `{id, γ_i, γ_i⁻¹}` of the periodic distance from `γ(a)` to `b`.
pub fn chart_distance(m: &ManifoldSpec, a: &[f64], b: &[f64]) -> f64 {
    let periods = m.periods();
    let mut best = periodic_distance(&periods, a, b);
    for ident in &m.identifications {
        for inverse in [false, true] {
            if let Some((image, _)) = ident.act(a, inverse) {
                best = best.min(periodic_distance(&periods, &image, b));
            }
        }
    }
    best
}

/// Follows the flow from each leaf sample to its own return nearest `t0`
/// and measures how far the endpoint lies from the start.
pub fn monodromy(
    m: &ManifoldSpec,
    u: &VectorField,
    samples: &[Vec<f64>],
    t0: f64,
    tol: f64,
    opts: &FlowOptions,
) -> Result<Monodromy, FlowError> {
    if m.leaf_function().is_none() {
        return Err(FlowError::NoLeafFunction);
    }
    let opts = FlowOptions {
        jacobian: false,
        leaf_crossings: true,
        ..*opts
    };
    let horizon = t0.abs() * 1.25 + 1e-3;
    let horizon = horizon * t0.signum();
    let results: Vec<Result<MonodromySample, FlowError>> = samples
        .par_iter()
        .map(|q| {
            let flow = integrate_flow(m, u, q, &[horizon], &opts)?;
            let nearest = flow
                .crossings
                .iter()
                .filter(|c| c.time != 0.0 && c.time.signum() == t0.signum())
                .min_by(|a, b| (a.time - t0).abs().total_cmp(&(b.time - t0).abs()));
            Ok(match nearest {
                Some(c) => MonodromySample {
                    start: flow.initial.clone(),
                    return_time: Some(c.time),
                    end: Some(c.point.clone()),
                    displacement: chart_distance(m, &c.point, &flow.initial),
                },
                None => MonodromySample {
                    start: flow.initial.clone(),
                    return_time: None,
                    end: None,
                    displacement: f64::INFINITY,
                },
            })
        })
        .collect();
    let samples = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_displacement = samples.iter().map(|s| s.displacement).fold(0.0, f64::max);
    let mean_displacement = samples.iter().map(|s| s.displacement).sum::<f64>() / samples.len().max(1) as f64;
    let times: Vec<f64> = samples.iter().filter_map(|s| s.return_time).collect();
    let spread = times.iter().map(|t| (t - t0).abs()).fold(0.0, f64::max);
    Ok(Monodromy {
        identity: max_displacement < tol,
        t0,
        tolerance: tol,
        max_displacement,
        mean_displacement,
        max_return_time_spread: spread,
        samples,
    })
}
