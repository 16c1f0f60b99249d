//! Flow of the unit field `E = U/λ`: trajectories with their differential,
//! leaf crossings, monodromy of leaf returns and the period homomorphism
//! `[σ] ↦ ∫_σ ω` on declared loops.

mod dopri;
mod events;
mod periods;

pub use events::{chart_distance, leaf_return_events, leaf_samples, monodromy, project_to_leaf, Monodromy, MonodromySample, ReturnEvent};
pub use periods::{
    classify_periods, gauss_kronrod, is_rational, line_integral, period_group, LoopPeriod, PeriodClass, PeriodReport,
    COMMENSURABILITY_TOLERANCE,
};

use crate::geometry::{AppliedMap, GeometryError, ManifoldSpec, VectorField};
use dopri::{Stepper, System};
use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

type LeafFn<'a> = &'a dyn Fn(&[f64]) -> f64;

#[derive(Debug, Clone, Error)]
pub enum FlowError {
    #[error("initial point {0:?} is outside the domain")]
    OutsideDomain(Vec<f64>),
    #[error("flow cannot start: {0}")]
    Start(#[source] GeometryError),
    #[error("no leaf_function declared; leaf returns cannot be detected")]
    NoLeafFunction,
    #[error("leaf function could not be evaluated: {0}")]
    LeafFunction(String),
    #[error("g(U,.) is not closed: |d omega| = {residual:e} at {point:?}")]
    NotClosed { point: Vec<f64>, residual: f64 },
    #[error("classification failed: {0}")]
    Classify(String),
    #[error("no leaf samples could be placed on the leaf")]
    NoLeafSamples,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowOptions {
    /// Relative and absolute local error target.
    pub tol: f64,
    pub max_steps: usize,
    /// Bring the trajectory back into the fundamental domain after every
    /// accepted step.
    pub wrap: bool,
    /// Propagate `dΦ` through the variational equation.
    pub jacobian: bool,
    /// Record sign changes of `h − h(p₀)` for the declared leaf function.
    pub leaf_crossings: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol: 1e-11,
            max_steps: 200_000,
            wrap: true,
            jacobian: true,
            leaf_crossings: true,
        }
    }
}

/// Why integration stopped in one direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Escaped { time: f64, point: Vec<f64> },
    StepUnderflow { time: f64, point: Vec<f64>, step: f64 },
    EvaluationFailed { time: f64, point: Vec<f64>, message: String },
    MaxSteps { time: f64 },
}

impl Termination {
    pub fn time(&self) -> Option<f64> {
        match self {
            Termination::Completed => None,
            Termination::Escaped { time, .. }
            | Termination::StepUnderflow { time, .. }
            | Termination::EvaluationFailed { time, .. }
            | Termination::MaxSteps { time } => Some(*time),
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::Completed => f.write_str("completed"),
            Termination::Escaped { time, .. } => write!(f, "left the domain at t = {time:.6}"),
            Termination::StepUnderflow { time, step, .. } => write!(f, "step underflow ({step:.1e}) at t = {time:.6}"),
            Termination::EvaluationFailed { time, message, .. } => write!(f, "evaluation failed at t = {time:.6}: {message}"),
            Termination::MaxSteps { time } => write!(f, "step limit reached at t = {time:.6}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FlowStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted weighted error norm (≤ 1).
    pub max_error: f64,
}

impl FlowStats {
    fn merge(&mut self, o: &FlowStats) {
        self.steps += o.steps;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
        self.max_error = self.max_error.max(o.max_error);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WrapEvent {
    pub time: f64,
    pub applied: Vec<AppliedMap>,
}

/// A transversal crossing of the leaf `h = h(p₀)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafCrossing {
    pub time: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub initial: Vec<f64>,
    /// Reached grid times, ascending.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `dΦ_t` at each reached time, when propagated.
    pub jacobians: Vec<DMatrix<f64>>,
    /// `∫₀ᵗ divE(Φ_s(p)) ds / (n−1)` at each reached time.
    pub quadrature: Vec<f64>,
    pub wraps: Vec<WrapEvent>,
    pub crossings: Vec<LeafCrossing>,
    pub forward: Termination,
    pub backward: Termination,
    /// Time interval actually integrated.
    pub achieved: (f64, f64),
    pub stats: FlowStats,
}

impl FlowResult {
    pub fn state_at(&self, t: f64) -> Option<&[f64]> {
        self.times.iter().position(|&s| s == t).map(|k| self.states[k].as_slice())
    }

    /// `f = exp(q)` at each reached time.
    pub fn warping(&self) -> Vec<f64> {
        self.quadrature.iter().map(|q| q.exp()).collect()
    }
}

struct Direction {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    jacobians: Vec<DMatrix<f64>>,
    quadrature: Vec<f64>,
    wraps: Vec<WrapEvent>,
    crossings: Vec<LeafCrossing>,
    end: Termination,
    reached: f64,
    stats: FlowStats,
}

fn run_direction(
    sys: System<'_>,
    p0: &[f64],
    targets: &[f64],
    dir: f64,
    opts: &FlowOptions,
    leaf: Option<LeafFn<'_>>,
) -> Result<Direction, FlowError> {
    let mut st = Stepper::new(sys, p0, dir, opts).map_err(FlowError::Start)?;
    let mut out = Direction {
        times: Vec::new(),
        states: Vec::new(),
        jacobians: Vec::new(),
        quadrature: Vec::new(),
        wraps: Vec::new(),
        crossings: Vec::new(),
        end: Termination::Completed,
        reached: 0.0,
        stats: FlowStats::default(),
    };
    'targets: for &target in targets {
        while st.t != target {
            match st.advance(target) {
                Ok(acc) => {
                    if let Some(g) = leaf {
                        let a = g(sys.point(&acc.y_prev));
                        let b = g(sys.point(&acc.y_end));
                        if a != 0.0 && (b == 0.0 || a.signum() != b.signum()) {
                            if let Some((time, y)) = st.refine(&acc, g, 1e-10) {
                                out.crossings.push(LeafCrossing {
                                    time,
                                    point: sys.point(&y).to_vec(),
                                });
                            }
                        }
                    }
                    if !acc.applied.is_empty() {
                        out.wraps.push(WrapEvent {
                            time: st.t,
                            applied: acc.applied,
                        });
                    }
                }
                Err(Termination::Completed) => break,
                Err(end) => {
                    out.end = end;
                    break 'targets;
                }
            }
        }
        out.times.push(target);
        out.states.push(sys.point(&st.y).to_vec());
        if let Some(j) = sys.jacobian_of(&st.y) {
            out.jacobians.push(j);
        }
        out.quadrature.push(sys.quadrature(&st.y));
    }
    out.reached = out.end.time().unwrap_or(st.t);
    out.stats = st.stats;
    Ok(out)
}

/// Integrates `x' = E(x)` from `p0` through the given times (of either
/// sign), with `dΦ_t` and the `divE` quadrature alongside.
pub fn integrate_flow(
    m: &ManifoldSpec,
    u: &VectorField,
    p0: &[f64],
    times: &[f64],
    opts: &FlowOptions,
) -> Result<FlowResult, FlowError> {
    let n = m.dim();
    let start = if opts.wrap {
        m.normalize(p0).map(|w| w.point)
    } else {
        m.domain.contains(p0).then(|| p0.to_vec())
    };
    let start = start.ok_or_else(|| FlowError::OutsideDomain(p0.to_vec()))?;
    let sys = System::new(m, u, opts.jacobian);

    let leaf_fn = match (opts.leaf_crossings, m.leaf_function()) {
        (true, Some(h)) => {
            let h0 = h.value(&start).map_err(|e| FlowError::LeafFunction(e.to_string()))?;
            Some(move |x: &[f64]| h.value(x).map(|v| v - h0).unwrap_or(f64::NAN))
        }
        _ => None,
    };
    let leaf: Option<LeafFn<'_>> = leaf_fn.as_ref().map(|f| f as &dyn Fn(&[f64]) -> f64);

    let mut fwd_t: Vec<f64> = times.iter().copied().filter(|&t| t >= 0.0).collect();
    fwd_t.sort_by(f64::total_cmp);
    fwd_t.dedup();
    let mut back_t: Vec<f64> = times.iter().copied().filter(|&t| t < 0.0).collect();
    back_t.sort_by(|a, b| b.total_cmp(a));
    back_t.dedup();

    let fwd = run_direction(sys, &start, &fwd_t, 1.0, opts, leaf)?;
    let back = run_direction(sys, &start, &back_t, -1.0, opts, leaf)?;

    let mut stats = fwd.stats;
    stats.merge(&back.stats);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut jacobians = Vec::new();
    let mut quadrature = Vec::new();
    for k in (0..back.times.len()).rev() {
        times.push(back.times[k]);
        states.push(back.states[k].clone());
        if opts.jacobian {
            jacobians.push(back.jacobians[k].clone());
        }
        quadrature.push(back.quadrature[k]);
    }
    times.extend(&fwd.times);
    states.extend(fwd.states);
    jacobians.extend(fwd.jacobians);
    quadrature.extend(&fwd.quadrature);
    let mut wraps = back.wraps;
    wraps.reverse();
    wraps.extend(fwd.wraps);
    let mut crossings = back.crossings;
    crossings.reverse();
    crossings.extend(fwd.crossings);
    debug_assert!(states.iter().all(|s| s.len() == n));
    Ok(FlowResult {
        initial: start,
        times,
        states,
        jacobians,
        quadrature,
        wraps,
        crossings,
        forward: fwd.end,
        backward: back.end,
        achieved: (back.reached.min(0.0), fwd.reached.max(0.0)),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::{Domain, IdentificationKind, Interval};

    fn chart(rows: &[&[&str]], iv: &[(f64, f64)]) -> ManifoldSpec {
        let coords = ["t", "x"];
        let metric = rows
            .iter()
            .map(|r| r.iter().map(|s| parse(s, &coords).unwrap()).collect())
            .collect();
        let domain = Domain::new(iv.iter().map(|&(a, b)| Interval::new(a, b)).collect());
        ManifoldSpec::new(coords.iter().map(|s| s.to_string()).collect(), metric, domain).unwrap()
    }

    fn field(c: &[&str]) -> VectorField {
        VectorField::new(c.iter().map(|s| parse(s, &["t", "x"]).unwrap()).collect())
    }

    #[test]
    fn product_chart_translation() {
        let m = chart(&[&["-1", "0"], &["0", "1"]], &[(-10.0, 10.0), (-1.0, 1.0)]);
        let r = integrate_flow(&m, &field(&["2", "0"]), &[0.0, 0.3], &[-1.0, 0.0, 2.5], &FlowOptions::default()).unwrap();
        assert_eq!(r.times, vec![-1.0, 0.0, 2.5]);
        assert!((r.states[0][0] + 1.0).abs() < 1e-12 && (r.states[2][0] - 2.5).abs() < 1e-12);
        assert!(r.states.iter().all(|s| (s[1] - 0.3).abs() < 1e-14));
        for j in &r.jacobians {
            assert!((j - DMatrix::identity(2, 2)).amax() < 1e-12);
        }
        assert!(r.forward.is_completed() && r.backward.is_completed());
    }

    #[test]
    fn escape_is_located() {
        let m = chart(&[&["-1", "0"], &["0", "1"]], &[(-1.0, 1.0), (-1.0, 1.0)]);
        let r = integrate_flow(&m, &field(&["1", "0"]), &[0.0, 0.0], &[3.0], &FlowOptions::default()).unwrap();
        match r.forward {
            Termination::Escaped { time, .. } => assert!((time - 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
        assert!(r.times.is_empty());
    }

    #[test]
    fn periodic_wrap_and_return() {
        let m = chart(&[&["1", "0"], &["0", "1"]], &[(-3.0, 3.0), (-1.0, 1.0)])
            .with_identification("cycle", IdentificationKind::Translation, vec![
                parse("t + 6", &["t", "x"]).unwrap(),
                parse("x", &["t", "x"]).unwrap(),
            ])
            .unwrap()
            .with_leaf_function(parse("t", &["t", "x"]).unwrap());
        let r = integrate_flow(&m, &field(&["1", "0"]), &[0.0, 0.2], &[13.0], &FlowOptions::default()).unwrap();
        let times: Vec<f64> = r.crossings.iter().map(|c| c.time).collect();
        assert_eq!(times.len(), 2, "{:?} {:?}", r.crossings, r.wraps);
        assert!((times[0] - 6.0).abs() < 1e-9 && (times[1] - 12.0).abs() < 1e-9);
        assert_eq!(r.wraps.len(), 2);
        assert!((r.states[0][0] - 1.0).abs() < 1e-9);
    }
}
