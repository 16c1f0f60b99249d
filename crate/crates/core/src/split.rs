//! Product decompositions: the warping function from the `divE` quadrature
//! along the flow, reconstruction of the product metric by pullback, and
//! the overall verdict.

use crate::classify::{check_consistency, classify_field, decomposition_type, Classification, ClassifyError, DecompositionType};
use crate::flow::{
    integrate_flow, leaf_return_events, leaf_samples, monodromy, period_group, FlowError, FlowOptions, FlowResult,
    Monodromy, PeriodClass, PeriodReport, ReturnEvent, Termination,
};
use crate::geometry::{orthogonal_frame, FramePair, GeometryError, ManifoldSpec, PointSample, VectorField};
use crate::spec::Problem;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SplitError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("base point {0:?} is outside the domain")]
    BasePoint(Vec<f64>),
}

/// Settings for [`split_report`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitConfig {
    pub classify_tol: f64,
    pub flow: FlowOptions,
    pub monodromy_tol: f64,
    pub reconstruction_tol: f64,
    pub base_point: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub leaf_points: usize,
    pub seed: u64,
    pub return_horizon: f64,
}

impl SplitConfig {
    pub fn from_problem(p: &Problem) -> Self {
        let widths = p
            .manifold
            .domain
            .intervals
            .iter()
            .filter(|iv| iv.is_bounded())
            .map(|iv| iv.hi - iv.lo)
            .fold(0.0, f64::max);
        SplitConfig {
            classify_tol: p.tolerances.classify,
            flow: FlowOptions {
                tol: p.tolerances.flow,
                ..FlowOptions::default()
            },
            monodromy_tol: p.tolerances.monodromy,
            reconstruction_tol: p.tolerances.reconstruction,
            base_point: p.sampling.base_point.clone(),
            t_grid: t_grid(p.sampling.t_span, p.sampling.t_points),
            leaf_points: p.sampling.leaf_points,
            seed: p.sampling.seed,
            return_horizon: p.sampling.return_horizon.unwrap_or((4.0 * widths).max(10.0)),
        }
    }
}

/// `points` equally spaced times over `span`, with `0` included.
pub fn t_grid(span: (f64, f64), points: usize) -> Vec<f64> {
    let points = points.max(2);
    let step = (span.1 - span.0) / (points - 1) as f64;
    let mut t: Vec<f64> = (0..points).map(|k| span.0 + k as f64 * step).collect();
    for v in t.iter_mut() {
        if v.abs() < 1e-12 * step.abs() {
            *v = 0.0;
        }
    }
    t.push(0.0);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// The base interval reached by the flow from the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaseInterval {
    /// Escape time backward; `None` when the whole requested span was covered.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub backward: Termination,
    pub forward: Termination,
}

impl BaseInterval {
    fn from_flow(r: &FlowResult) -> Self {
        BaseInterval {
            a: r.backward.time(),
            b: r.forward.time(),
            backward: r.backward.clone(),
            forward: r.forward.clone(),
        }
    }

    pub fn complete(&self) -> bool {
        self.a.is_none() && self.b.is_none()
    }
}

/// `f(t_k, x_j)` from the `divE` quadrature; leaf 0 is the base point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WarpingTable {
    pub t: Vec<f64>,
    pub leaves: Vec<Vec<f64>>,
    /// `f[j][k]`, `None` where the node was not reached.
    pub f: Vec<Vec<Option<f64>>>,
    /// `λ(Φ_t(p))/λ(p)` along the base trajectory.
    pub lambda_ratio: Vec<Option<f64>>,
    pub interval: BaseInterval,
}

impl WarpingTable {
    /// `max_k |f(t_k, p) − λ(Φ_p(t_k))/λ(p)|` on the base trajectory.
    pub fn lambda_ratio_gap(&self) -> f64 {
        self.f[0]
            .iter()
            .zip(&self.lambda_ratio)
            .filter_map(|(a, b)| Some((a.as_ref()? - b.as_ref()?).abs()))
            .fold(0.0, f64::max)
    }

    /// `max_{j,k} |f(t_k, x_j) − f(t_k, x_0)|`.
    pub fn leaf_spread(&self) -> f64 {
        let mut s = 0.0f64;
        for row in &self.f[1..] {
            for (a, b) in row.iter().zip(&self.f[0]) {
                if let (Some(a), Some(b)) = (a, b) {
                    s = s.max((a - b).abs());
                }
            }
        }
        s
    }

    /// `max_j |f(0, x_j) − 1|`.
    pub fn normalization_defect(&self) -> f64 {
        let Some(k0) = self.t.iter().position(|&t| t == 0.0) else {
            return f64::INFINITY;
        };
        self.f
            .iter()
            .filter_map(|row| row[k0])
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn trajectories(
    m: &ManifoldSpec,
    u: &VectorField,
    leaves: &[Vec<f64>],
    t: &[f64],
    opts: &FlowOptions,
) -> Result<Vec<FlowResult>, FlowError> {
    let opts = FlowOptions {
        leaf_crossings: false,
        ..*opts
    };
    leaves.par_iter().map(|q| integrate_flow(m, u, q, t, &opts)).collect()
}

fn table(m: &ManifoldSpec, u: &VectorField, t: &[f64], flows: &[FlowResult]) -> WarpingTable {
    let lookup = |r: &FlowResult, v: &[f64]| -> Vec<Option<f64>> {
        t.iter()
            .map(|tk| r.times.iter().position(|s| s == tk).map(|k| v[k]))
            .collect()
    };
    let f = flows.iter().map(|r| lookup(r, &r.warping())).collect();
    let base = &flows[0];
    let lambda = |x: &[f64]| orthogonal_frame(m, x, u).map(|fr| fr.lambda).ok();
    let l0 = lambda(&base.initial);
    let lambda_ratio = t
        .iter()
        .map(|tk| {
            let k = base.times.iter().position(|s| s == tk)?;
            Some(lambda(&base.states[k])? / l0?)
        })
        .collect();
    WarpingTable {
        t: t.to_vec(),
        leaves: flows.iter().map(|r| r.initial.clone()).collect(),
        f,
        lambda_ratio,
        interval: BaseInterval::from_flow(base),
    }
}

/// `f(t, x) = exp(∫₀ᵗ divE(Φ_x(s)) ds / (n−1))` on `t_grid × leaves`, with
/// `leaves[0]` the base point.
pub fn construct_warping(
    m: &ManifoldSpec,
    u: &VectorField,
    leaves: &[Vec<f64>],
    t_grid: &[f64],
    opts: &FlowOptions,
) -> Result<WarpingTable, SplitError> {
    let flows = trajectories(
        m,
        u,
        leaves,
        t_grid,
        &FlowOptions {
            jacobian: false,
            ..*opts
        },
    )?;
    Ok(table(m, u, t_grid, &flows))
}

/// Adapted frame at a leaf sample: `g₀` in this basis is `diag(signs)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafFrameSample {
    pub point: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    pub signs: Vec<f64>,
}

/// `g_t(dΦ_t e_a, dΦ_t e_b)` at one grid node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeGram {
    pub t: f64,
    pub leaf: usize,
    pub gram: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridNode {
    pub t: f64,
    pub leaf: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub model: DecompositionType,
    pub table: WarpingTable,
    pub g0: Vec<LeafFrameSample>,
    /// Raw leaf metrics, for the parametrized model.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub g_t: Vec<NodeGram>,
    pub nodes: usize,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub worst: Option<GridNode>,
    pub unreachable: Vec<GridNode>,
    /// Residual at every reached node, leaf-major.
    #[serde(skip)]
    pub residuals: Vec<(GridNode, f64)>,
}

/// Pushes `∂t ↦ E` and leaf frame vectors `e_a ↦ dΦ_t e_a` into `M` at every
/// grid node and compares `g` on them with the product model.
pub fn reconstruct_and_verify(
    m: &ManifoldSpec,
    u: &VectorField,
    leaves: &[Vec<f64>],
    t_grid: &[f64],
    model: DecompositionType,
    opts: &FlowOptions,
) -> Result<Reconstruction, SplitError> {
    let flows = trajectories(
        m,
        u,
        leaves,
        t_grid,
        &FlowOptions {
            jacobian: true,
            ..*opts
        },
    )?;
    let table = table(m, u, t_grid, &flows);
    let frames: Vec<FramePair> = flows
        .iter()
        .map(|r| orthogonal_frame(m, &r.initial, u))
        .collect::<Result<_, _>>()?;
    let n = m.dim();

    struct NodeResult {
        node: GridNode,
        residual: Option<f64>,
        gram: Option<NodeGram>,
    }
    let per_leaf: Vec<Vec<NodeResult>> = flows
        .par_iter()
        .enumerate()
        .map(|(j, r)| {
            let frame = &frames[j];
            t_grid
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let node = GridNode { t, leaf: j };
                    let f_model = match model {
                        DecompositionType::Direct | DecompositionType::Parametrized => Some(1.0),
                        DecompositionType::Warped => table.f[0][k],
                        DecompositionType::Twisted => table.f[j][k],
                    };
                    let Some(idx) = r.times.iter().position(|s| *s == t) else {
                        return NodeResult { node, residual: None, gram: None };
                    };
                    let Some(f) = f_model else {
                        return NodeResult { node, residual: None, gram: None };
                    };
                    let y = &r.states[idx];
                    let jac = &r.jacobians[idx];
                    let eval = || -> Option<(f64, NodeGram)> {
                        let g = m.metric_matrix(y).ok()?;
                        let e = orthogonal_frame(m, y, u).ok()?.e;
                        let mut images = vec![e];
                        for v in &frame.e_perp {
                            images.push((0..n).map(|i| (0..n).map(|l| jac[(i, l)] * v[l]).sum()).collect());
                        }
                        let dot = |a: &[f64], b: &[f64]| -> f64 {
                            let mut s = 0.0;
                            for i in 0..n {
                                for l in 0..n {
                                    s += g[(i, l)] * a[i] * b[l];
                                }
                            }
                            s
                        };
                        let mut worst = 0.0f64;
                        let mut scale = 1.0f64;
                        let mut gram = vec![vec![0.0; n - 1]; n - 1];
                        for a in 0..n {
                            for b in a..n {
                                let actual = dot(&images[a], &images[b]);
                                let expected = match (a, b) {
                                    (0, 0) => Some(frame.eps),
                                    (0, _) => Some(0.0),
                                    _ if model == DecompositionType::Parametrized => None,
                                    _ if a == b => Some(f * f * frame.signs[a - 1]),
                                    _ => Some(0.0),
                                };
                                if a > 0 {
                                    gram[a - 1][b - 1] = actual;
                                    gram[b - 1][a - 1] = actual;
                                }
                                if let Some(x) = expected {
                                    scale = scale.max(x.abs());
                                    worst = worst.max((actual - x).abs());
                                }
                            }
                        }
                        Some((worst / scale, NodeGram { t, leaf: j, gram }))
                    };
                    match eval() {
                        Some((res, gram)) => NodeResult {
                            node,
                            residual: Some(res),
                            gram: Some(gram),
                        },
                        None => NodeResult { node, residual: None, gram: None },
                    }
                })
                .collect()
        })
        .collect();

    let mut max_residual = 0.0f64;
    let mut sum_sq = 0.0;
    let mut nodes = 0;
    let mut worst = None;
    let mut unreachable = Vec::new();
    let mut g_t = Vec::new();
    let mut residuals = Vec::new();
    for r in per_leaf.into_iter().flatten() {
        match r.residual {
            Some(x) => {
                residuals.push((r.node, x));
                nodes += 1;
                sum_sq += x * x;
                if x > max_residual || worst.is_none() {
                    max_residual = max_residual.max(x);
                    worst = Some(r.node);
                }
                if model == DecompositionType::Parametrized {
                    g_t.extend(r.gram);
                }
            }
            None => unreachable.push(r.node),
        }
    }
    let g0 = frames
        .iter()
        .map(|fr| LeafFrameSample {
            point: fr.base.clone(),
            frame: fr.e_perp.clone(),
            signs: fr.signs.clone(),
        })
        .collect();
    Ok(Reconstruction {
        model,
        table,
        g0,
        g_t,
        nodes,
        max_residual,
        rms_residual: if nodes > 0 { (sum_sq / nodes as f64).sqrt() } else { f64::NAN },
        worst,
        unreachable,
        residuals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "base", content = "type", rename_all = "snake_case")]
pub enum VerdictClass {
    /// `ℝ × L` over the sampled span.
    Line(DecompositionType),
    /// `(a, b) × L`, with at least one end reached by escape.
    Interval(DecompositionType),
    Circle(DecompositionType),
    CoveringOnly,
    NoSplitEvidence,
    Indeterminate,
}

impl std::fmt::Display for VerdictClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lower = |d: &DecompositionType| d.to_string().to_lowercase();
        match self {
            VerdictClass::Line(d) => write!(f, "ℝ×L {}", lower(d)),
            VerdictClass::Interval(d) => write!(f, "(a,b)×L {}", lower(d)),
            VerdictClass::Circle(d) => write!(f, "S¹×L {}", lower(d)),
            VerdictClass::CoveringOnly => f.write_str("covering-only"),
            VerdictClass::NoSplitEvidence => f.write_str("no-split-evidence"),
            VerdictClass::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub class: VerdictClass,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<BaseInterval>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitReport {
    pub classification: Classification,
    pub decomposition: DecompositionType,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconsistency: Option<String>,
    pub base_point: Vec<f64>,
    pub leaf_value: Option<f64>,
    pub return_horizon: f64,
    pub returns: Option<Vec<ReturnEvent>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub returns_note: Option<String>,
    pub monodromy: Option<Monodromy>,
    pub warping: Option<WarpingTable>,
    pub reconstruction: Option<Reconstruction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_error: Option<String>,
    pub periods: Option<PeriodReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periods_error: Option<String>,
    pub verdict: Verdict,
}

/// Quadrature tolerance for loop integrals.
pub const PERIOD_QUADRATURE_TOLERANCE: f64 = 1e-10;

/// The full pipeline: classification, leaf returns, monodromy, warping,
/// reconstruction and periods, ending in a verdict.
pub fn split_report(
    m: &ManifoldSpec,
    u: &VectorField,
    samples: &[PointSample],
    cfg: &SplitConfig,
) -> Result<SplitReport, SplitError> {
    let c = classify_field(m, u, samples, cfg.classify_tol)?;
    let inconsistency = check_consistency(&c).err().map(|e| e.to_string());
    let decomposition = decomposition_type(&c)?;
    let base = m
        .normalize(&cfg.base_point)
        .filter(|w| m.domain.admissible(&w.point))
        .ok_or_else(|| SplitError::BasePoint(cfg.base_point.clone()))?
        .point;
    let h = m.leaf_function();
    let leaf_value = h.and_then(|h| h.value(&base).ok());

    let (returns, returns_note) = if h.is_some() {
        let opts = FlowOptions {
            jacobian: false,
            leaf_crossings: true,
            ..cfg.flow
        };
        match integrate_flow(m, u, &base, &[cfg.return_horizon], &opts).and_then(|r| {
            let ev = leaf_return_events(m, &r)?;
            Ok((ev, r.forward))
        }) {
            Ok((ev, end)) => {
                let note = (!end.is_completed()).then(|| format!("return search stopped early: {end}"));
                (Some(ev.into_iter().filter(|e| e.time > 0.0).collect::<Vec<_>>()), note)
            }
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some(FlowError::NoLeafFunction.to_string()))
    };

    let leaves = if h.is_some() {
        leaf_samples(m, &base, cfg.leaf_points, cfg.seed)?
    } else {
        vec![base.clone()]
    };

    let monodromy = match returns.as_deref() {
        Some([first, ..]) => Some(monodromy(m, u, &leaves, first.time, cfg.monodromy_tol, &cfg.flow)?),
        _ => None,
    };

    let (reconstruction, reconstruction_error) =
        match reconstruct_and_verify(m, u, &leaves, &cfg.t_grid, decomposition, &cfg.flow) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let warping = match decomposition {
        DecompositionType::Warped | DecompositionType::Twisted => reconstruction.as_ref().map(|r| r.table.clone()),
        _ => None,
    };

    let (periods, periods_error) = if m.loops.is_empty() {
        (None, None)
    } else {
        match period_group(m, u, samples, cfg.classify_tol, PERIOD_QUADRATURE_TOLERANCE) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let verdict = decide(
        &c,
        decomposition,
        h.is_some(),
        returns.as_deref(),
        monodromy.as_ref(),
        reconstruction.as_ref(),
        !m.loops.is_empty(),
        periods.as_ref(),
        cfg.reconstruction_tol,
    );

    Ok(SplitReport {
        classification: c,
        decomposition,
        inconsistency,
        base_point: base,
        leaf_value,
        return_horizon: cfg.return_horizon,
        returns,
        returns_note,
        monodromy,
        warping,
        reconstruction,
        reconstruction_error,
        periods,
        periods_error,
        verdict,
    })
}

/// Runs [`split_report`] with settings taken from the problem.
pub fn split_problem(p: &Problem) -> Result<SplitReport, SplitError> {
    split_report(&p.manifold, &p.field, &p.samples, &SplitConfig::from_problem(p))
}

#[allow(clippy::too_many_arguments)]
fn decide(
    c: &Classification,
    d: DecompositionType,
    has_leaf_function: bool,
    returns: Option<&[ReturnEvent]>,
    mono: Option<&Monodromy>,
    recon: Option<&Reconstruction>,
    has_loops: bool,
    periods: Option<&PeriodReport>,
    recon_tol: f64,
) -> Verdict {
    let mut reasons = Vec::new();
    let field_kind = if c.parallel.holds {
        "parallel field"
    } else if c.irrotational.holds && c.conformal.holds {
        "closed conformal field"
    } else if c.geodesic_unit.holds {
        "geodesic unit field"
    } else {
        "non-geodesic unit field"
    };
    reasons.push(field_kind.to_string());
    let group = periods.map(|p| p.class);
    let returned = returns.is_some_and(|r| !r.is_empty());
    let make = |class: VerdictClass, text: String, reasons: Vec<String>| Verdict {
        class,
        text,
        interval: None,
        period: None,
        reasons,
    };
    let no_split = |mut reasons: Vec<String>, why: &str| {
        reasons.push(why.to_string());
        let text = format!("no-split-evidence: {}", reasons.join(", "));
        make(VerdictClass::NoSplitEvidence, text, reasons)
    };
    let indeterminate = |mut reasons: Vec<String>, why: &str| {
        reasons.push(why.to_string());
        let text = format!("indeterminate: {}", reasons.join(", "));
        make(VerdictClass::Indeterminate, text, reasons)
    };

    if group == Some(PeriodClass::Dense) {
        return no_split(reasons, "period group dense");
    }
    if !c.geodesic_unit.holds {
        return no_split(reasons, "flow does not carry leaves to leaves");
    }
    if !has_leaf_function {
        return indeterminate(reasons, "no leaf function, leaf returns undetectable");
    }
    if group == Some(PeriodClass::Indeterminate) {
        return indeterminate(reasons, "period quadrature failed");
    }
    if has_loops && group.is_none() {
        return indeterminate(reasons, "period group unavailable");
    }
    let Some(recon) = recon else {
        return indeterminate(reasons, "reconstruction failed");
    };
    if !(recon.max_residual < recon_tol) {
        return no_split(
            reasons,
            &format!("pullback residual {:.3e} exceeds {recon_tol:.1e}", recon.max_residual),
        );
    }
    let group_text = group.map(|g| format!("period group {g}"));
    if returned {
        let m = mono.expect("monodromy is computed whenever returns exist");
        reasons.push(format!("leaf return at t0 = {:.6}", m.t0));
        if let Some(g) = &group_text {
            reasons.push(g.clone());
        }
        if group == Some(PeriodClass::Trivial) {
            return indeterminate(reasons, "leaf returns but trivial period group");
        }
        if m.identity {
            let class = VerdictClass::Circle(d);
            let text = format!(
                "consistent with {class}, period = {:.10} at sampled resolution (monodromy identity, max displacement {:.2e})",
                m.t0, m.max_displacement
            );
            return Verdict {
                period: Some(m.t0),
                ..make(class, text, reasons)
            };
        }
        reasons.push(format!("nontrivial monodromy, max displacement {:.3}", m.max_displacement));
        let text = format!(
            "covering-only: periodic integral curves but nontrivial monodromy ({})",
            reasons.join(", ")
        );
        return make(VerdictClass::CoveringOnly, text, reasons);
    }
    if group == Some(PeriodClass::Discrete) {
        reasons.push("leaf returns undetectable".into());
        return no_split(reasons, "period group discrete");
    }
    reasons.push("no leaf returns".into());
    if let Some(g) = group_text {
        reasons.push(g);
    }
    let interval = recon.table.interval.clone();
    let (class, text) = if interval.complete() {
        let class = VerdictClass::Line(d);
        (class, format!("consistent with {d}, ℝ×L at sampled resolution"))
    } else {
        let class = VerdictClass::Interval(d);
        let ends: Vec<String> = [("a", interval.a), ("b", interval.b)]
            .iter()
            .filter_map(|(name, v)| v.map(|v| format!("{name} ≈ {v:.6}")))
            .collect();
        let text = format!(
            "consistent with {d}, (a,b)×L with {} at sampled resolution",
            ends.join(", ")
        );
        (class, text)
    };
    Verdict {
        interval: Some(interval),
        ..make(class, text, reasons)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_contains_zero_once() {
        let g = t_grid((-1.0, 1.0), 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g.iter().filter(|t| **t == 0.0).count(), 1);
        let g = t_grid((-1.0, 2.0), 4);
        assert_eq!(g, vec![-1.0, 0.0, 1.0, 2.0]);
        let g = t_grid((-0.5, 1.0), 3);
        assert_eq!(g, vec![-0.5, 0.0, 0.25, 1.0]);
    }
}
