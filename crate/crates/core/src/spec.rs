//! Spec-file format: a TOML document describing a manifold chart, a
//! vector field and run settings.

use crate::expr::{parse, parse_constant, Expr};
use crate::geometry::{
    Domain, Exclusion, IdentificationKind, Interval, ManifoldSpec, PointSample, SpecError, Validation, VectorField,
    VectorFieldEval,
};
use crate::sampling::sample_points;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

/// Interval endpoint: a number or a constant expression such as `"pi/2"`
/// or `"-inf"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Number(f64),
    Text(String),
}

impl Bound {
    pub fn value(&self) -> Result<f64, SpecError> {
        match self {
            Bound::Number(x) => Ok(*x),
            Bound::Text(t) => parse_constant(t).map_err(|source| SpecError::Parse {
                context: format!("bound `{t}`"),
                source,
            }),
        }
    }
}

impl From<f64> for Bound {
    fn from(x: f64) -> Self {
        Bound::Number(x)
    }
}

impl From<&str> for Bound {
    fn from(t: &str) -> Self {
        Bound::Text(t.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSpec {
    pub name: String,
    pub kind: IdentificationKind,
    pub map: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionSpec {
    pub coordinate: String,
    pub center: Bound,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub intervals: Vec<[Bound; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[Bound; 2]>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<ExclusionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub name: String,
    /// Each segment is a tuple of expressions in the parameter `tau ∈ [0,1]`.
    pub segments: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<Bound>>,
    #[serde(default = "default_t_span")]
    pub t_span: [Bound; 2],
    #[serde(default = "default_t_points")]
    pub t_points: usize,
    #[serde(default = "default_leaf_points")]
    pub leaf_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_horizon: Option<f64>,
}

fn default_count() -> usize {
    200
}
fn default_t_span() -> [Bound; 2] {
    [Bound::Number(-1.0), Bound::Number(1.0)]
}
fn default_t_points() -> usize {
    21
}
fn default_leaf_points() -> usize {
    16
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            count: default_count(),
            seed: 0,
            base_point: None,
            t_span: default_t_span(),
            t_points: default_t_points(),
            leaf_points: default_leaf_points(),
            return_horizon: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_classify")]
    pub classify: f64,
    #[serde(default = "default_flow")]
    pub flow: f64,
    #[serde(default = "default_monodromy")]
    pub monodromy: f64,
    /// Bound on the pullback-versus-model metric residual.
    #[serde(default = "default_reconstruction")]
    pub reconstruction: f64,
}

fn default_classify() -> f64 {
    crate::classify::DEFAULT_TOLERANCE
}
fn default_flow() -> f64 {
    1e-11
}
fn default_monodromy() -> f64 {
    1e-6
}
fn default_reconstruction() -> f64 {
    1e-5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            classify: default_classify(),
            flow: default_flow(),
            monodromy: default_monodromy(),
            reconstruction: default_reconstruction(),
        }
    }
}

/// Metric rows: either the lower triangle (row `i` has `i + 1` entries) or
/// the full square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub notes: String,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    pub metric: Vec<Vec<String>>,
    pub field: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_function: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub identifications: Vec<IdentificationSpec>,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loops: Vec<LoopSpec>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

/// Flow and reconstruction settings resolved from the spec.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
    pub base_point: Vec<f64>,
    pub t_span: (f64, f64),
    pub t_points: usize,
    pub leaf_points: usize,
    pub return_horizon: Option<f64>,
}

/// A validated spec: manifold, field, samples and settings.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub notes: String,
    pub manifold: ManifoldSpec,
    pub field: VectorField,
    pub samples: Vec<PointSample>,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    pub validation: Validation,
    pub source: SpecFile,
}

/// Relative tolerance for `dh ∥ ω` when validating a leaf function.
pub const LEAF_FUNCTION_TOLERANCE: f64 = 1e-8;

impl SpecFile {
    pub fn from_toml(text: &str) -> Result<Self, SpecError> {
        toml::from_str(text).map_err(|e| SpecError::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::Format(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec files always serialize")
    }

    fn expr(&self, text: &str, context: impl Fn() -> String) -> Result<Expr, SpecError> {
        parse(text, &self.coordinates).map_err(|source| SpecError::Parse {
            context: context(),
            source,
        })
    }

    fn exprs(&self, texts: &[String], what: &'static str, context: impl Fn(usize) -> String) -> Result<Vec<Expr>, SpecError> {
        if texts.len() != self.dimension {
            return Err(SpecError::Count {
                what,
                expected: self.dimension,
                found: texts.len(),
            });
        }
        texts.iter().enumerate().map(|(i, t)| self.expr(t, || context(i))).collect()
    }

    fn metric_rows(&self) -> Result<Vec<Vec<Expr>>, SpecError> {
        let n = self.dimension;
        if self.metric.len() != n {
            return Err(SpecError::Count {
                what: "metric rows",
                expected: n,
                found: self.metric.len(),
            });
        }
        let lower = self.metric.iter().enumerate().all(|(i, r)| r.len() == i + 1);
        let full = self.metric.iter().all(|r| r.len() == n);
        if !lower && !full {
            let (i, r) = self
                .metric
                .iter()
                .enumerate()
                .find(|(i, r)| r.len() != n && r.len() != i + 1)
                .unwrap_or((0, &self.metric[0]));
            return Err(SpecError::Format(format!(
                "metric row {i} has {} entries; expected {} (lower triangle) or {n} (full)",
                r.len(),
                i + 1
            )));
        }
        let mut rows = vec![vec![Expr::Const(0.0); n]; n];
        for (i, r) in self.metric.iter().enumerate() {
            for (j, t) in r.iter().enumerate() {
                let e = self.expr(t, || format!("metric entry ({i},{j})"))?;
                if lower && !full {
                    rows[j][i] = e.clone();
                }
                rows[i][j] = e;
            }
        }
        Ok(rows)
    }

    fn intervals(&self, raw: &[[Bound; 2]], what: &'static str) -> Result<Vec<Interval>, SpecError> {
        if raw.len() != self.dimension {
            return Err(SpecError::Count {
                what,
                expected: self.dimension,
                found: raw.len(),
            });
        }
        raw.iter()
            .map(|[a, b]| Ok(Interval::new(a.value()?, b.value()?)))
            .collect()
    }

    /// Parses and validates the spec. `count` and `seed` override the
    /// sampling section when given.
    pub fn build_with(&self, count: Option<usize>, seed: Option<u64>) -> Result<Problem, SpecError> {
        let n = self.dimension;
        if n < 2 {
            return Err(SpecError::Dimension(n));
        }
        if n > crate::sampling::MAX_DIMENSION {
            return Err(SpecError::Format(format!(
                "dimension {n} exceeds the sampler limit of {}",
                crate::sampling::MAX_DIMENSION
            )));
        }
        if self.coordinates.len() != n {
            return Err(SpecError::Count {
                what: "coordinates",
                expected: n,
                found: self.coordinates.len(),
            });
        }
        let metric = self.metric_rows()?;
        let intervals = self.intervals(&self.domain.intervals, "domain intervals")?;
        let sample_box = match &self.domain.sample_box {
            Some(b) => self.intervals(b, "sample box intervals")?,
            None if intervals.iter().all(|iv| iv.is_bounded()) => intervals.clone(),
            None => {
                return Err(SpecError::Format(
                    "domain.sample_box is required when an interval is unbounded".into(),
                ))
            }
        };
        let exclusions = self
            .domain
            .exclusions
            .iter()
            .map(|e| {
                let coordinate = self
                    .coordinates
                    .iter()
                    .position(|c| *c == e.coordinate)
                    .ok_or_else(|| SpecError::BadExclusion(e.coordinate.clone()))?;
                Ok(Exclusion {
                    coordinate,
                    center: e.center.value()?,
                    radius: e.radius,
                })
            })
            .collect::<Result<Vec<_>, SpecError>>()?;
        let domain = Domain {
            intervals,
            sample_box,
            exclusions,
        };
        let mut m = ManifoldSpec::new(self.coordinates.clone(), metric, domain)?;
        for id in &self.identifications {
            let map = self.exprs(&id.map, "identification components", |i| {
                format!("identification `{}` component {i}", id.name)
            })?;
            m = m.with_identification(&id.name, id.kind, map)?;
        }
        for l in &self.loops {
            let segments = l
                .segments
                .iter()
                .enumerate()
                .map(|(k, seg)| {
                    if seg.len() != n {
                        return Err(SpecError::Count {
                            what: "loop components",
                            expected: n,
                            found: seg.len(),
                        });
                    }
                    seg.iter()
                        .enumerate()
                        .map(|(i, t)| {
                            parse(t, &["tau"]).map_err(|source| SpecError::Parse {
                                context: format!("loop `{}` segment {k} component {i}", l.name),
                                source,
                            })
                        })
                        .collect()
                })
                .collect::<Result<Vec<Vec<Expr>>, SpecError>>()?;
            m = m.with_loop(&l.name, segments)?;
        }
        if let Some(h) = &self.leaf_function {
            m = m.with_leaf_function(self.expr(h, || "leaf_function".into())?);
        }
        let field = VectorField::new(self.exprs(&self.field, "field components", |i| format!("field component {i}"))?);

        let count = count.unwrap_or(self.sampling.count);
        let seed = seed.unwrap_or(self.sampling.seed);
        let samples = sample_points(&m.domain, count, seed);
        if samples.is_empty() {
            return Err(SpecError::NoSamples);
        }
        let raw: Vec<Vec<f64>> = samples.iter().map(|s| s.coords.clone()).collect();
        let validation = m.validate(&raw)?;
        for p in &raw {
            field.value(p).map_err(|source| SpecError::Eval {
                context: "field".into(),
                source,
            })?;
            for id in &m.identifications {
                let r = m.field_invariance_residual(id, &field, p)?;
                if r > 1e-9 {
                    return Err(SpecError::FieldNotPreserved {
                        name: id.name.clone(),
                        point: p.clone(),
                        residual: r,
                    });
                }
            }
        }
        if let Some(h) = m.leaf_function() {
            for p in &raw {
                check_leaf_function(&m, &field, h, p)?;
            }
        }

        let base_point = match &self.sampling.base_point {
            Some(b) => {
                if b.len() != n {
                    return Err(SpecError::Count {
                        what: "base point coordinates",
                        expected: n,
                        found: b.len(),
                    });
                }
                b.iter().map(Bound::value).collect::<Result<Vec<_>, _>>()?
            }
            None => m.domain.sample_box.iter().map(|iv| 0.5 * (iv.lo + iv.hi)).collect(),
        };
        let t_span = (self.sampling.t_span[0].value()?, self.sampling.t_span[1].value()?);
        if !(t_span.0 <= 0.0 && 0.0 <= t_span.1 && t_span.0 < t_span.1) {
            return Err(SpecError::Format(format!(
                "t_span [{}, {}] must contain 0",
                t_span.0, t_span.1
            )));
        }
        Ok(Problem {
            name: self.name.clone(),
            notes: self.notes.clone(),
            manifold: m,
            field,
            samples,
            sampling: Sampling {
                count,
                seed,
                base_point,
                t_span,
                t_points: self.sampling.t_points.max(2),
                leaf_points: self.sampling.leaf_points.max(1),
                return_horizon: self.sampling.return_horizon,
            },
            tolerances: self.tolerances,
            validation,
            source: self.clone(),
        })
    }

    pub fn build(&self) -> Result<Problem, SpecError> {
        self.build_with(None, None)
    }

    /// The same chart with identifications and loops dropped and every
    /// coordinate moved by an identification made unbounded. Sampling keeps
    /// the original box.
    pub fn unwrapped(&self) -> SpecFile {
        let mut out = self.clone();
        let moved: Vec<bool> = (0..self.dimension)
            .map(|k| {
                self.identifications
                    .iter()
                    .any(|id| id.map.get(k).is_some_and(|m| m.trim() != self.coordinates[k]))
            })
            .collect();
        if out.domain.sample_box.is_none() {
            out.domain.sample_box = Some(self.domain.intervals.clone());
        }
        for (iv, moved) in out.domain.intervals.iter_mut().zip(moved) {
            if moved {
                *iv = [Bound::Text("-inf".into()), Bound::Text("inf".into())];
            }
        }
        out.identifications.clear();
        out.loops.clear();
        out
    }
}

/// `dh` must be a multiple of `ω = g(U,·)`, so that level sets of `h` are
/// the leaves of `U⊥`.
fn check_leaf_function(
    m: &ManifoldSpec,
    field: &VectorField,
    h: &crate::geometry::ScalarField,
    p: &[f64],
) -> Result<(), SpecError> {
    let ev = VectorFieldEval::new(m, field, p).map_err(|e| match e {
        crate::geometry::GeometryError::NullField { point, norm_sq } => SpecError::NullField { point, norm_sq },
        crate::geometry::GeometryError::Domain(source) => SpecError::Eval {
            context: "field".into(),
            source,
        },
        _ => SpecError::Degenerate { point: p.to_vec() },
    })?;
    let dh = h.partials(p).map_err(|source| SpecError::Eval {
        context: "leaf_function".into(),
        source,
    })?;
    let w = ev.omega();
    // dh = c ω with c = dh(U) / ω(U)
    let c = dh.iter().zip(&ev.u.v).map(|(a, b)| a * b).sum::<f64>() / ev.norm_sq.v;
    let size = dh.iter().chain(w.iter()).fold(0.0f64, |a, b| a.max(b.abs()));
    let gap = dh.iter().zip(&w).map(|(a, b)| (a - c * b).abs()).fold(0.0, f64::max);
    if !(gap <= LEAF_FUNCTION_TOLERANCE * size.max(1e-300)) || c == 0.0 {
        return Err(SpecError::Format(format!(
            "leaf_function: dh is not proportional to g(U,·) at {p:?} (gap {gap:e})"
        )));
    }
    Ok(())
}
