use super::fields::{MetricField, ScalarField, VectorField};
use super::point::{index_of, PointGeometry, Order};
use super::GeometryError;
use crate::expr::{DomainError, Expr, ParseError, Program};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identification index, inverse flag, image, differential, violation.
type Candidate = (usize, bool, Vec<f64>, DMatrix<f64>, Vec<f64>);

/// Relative tolerance for the load-time isometry check of identifications.
pub const ISOMETRY_TOLERANCE: f64 = 1e-9;

const MAX_WRAPS: usize = 32;

#[derive(Debug, Clone, Error)]
pub enum SpecError {
    #[error("dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("expected {expected} {what}, found {found}")]
    Count {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid coordinate name `{0}`")]
    BadCoordinate(String),
    #[error("coordinate `{0}` declared twice")]
    DuplicateCoordinate(String),
    #[error("{context}: {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },
    #[error("{context}: {source}")]
    Eval {
        context: String,
        #[source]
        source: DomainError,
    },
    #[error("metric is not symmetric: entries ({i},{j}) and ({j},{i}) differ by {residual:e} at {point:?}")]
    Asymmetric {
        i: usize,
        j: usize,
        residual: f64,
        point: Vec<f64>,
    },
    #[error("metric is degenerate at {point:?}")]
    Degenerate { point: Vec<f64> },
    #[error("metric signature changes: {expected} negative directions at {first:?}, {found} at {point:?}")]
    SignatureChange {
        expected: usize,
        found: usize,
        first: Vec<f64>,
        point: Vec<f64>,
    },
    #[error("interval for coordinate `{coordinate}` is invalid: [{lo}, {hi})")]
    Interval { coordinate: String, lo: f64, hi: f64 },
    #[error("exclusion zone refers to unknown coordinate `{0}`")]
    BadExclusion(String),
    #[error("identification `{name}` is tagged translation but is not a constant shift")]
    NotTranslation { name: String },
    #[error("identification `{name}` is not an isometry at {point:?} (residual {residual:e})")]
    NotIsometry {
        name: String,
        point: Vec<f64>,
        residual: f64,
    },
    #[error("identification `{name}` does not preserve the field at {point:?} (residual {residual:e})")]
    FieldNotPreserved {
        name: String,
        point: Vec<f64>,
        residual: f64,
    },
    #[error("identification `{name}` could not be inverted at {point:?}")]
    NotInvertible { name: String, point: Vec<f64> },
    #[error("loop `{name}` is not closed after segment {segment} (gap {gap:e})")]
    LoopNotClosed {
        name: String,
        segment: usize,
        gap: f64,
    },
    #[error("field is null at sample point {point:?} (g(U,U) = {norm_sq:e})")]
    NullField { point: Vec<f64>, norm_sq: f64 },
    #[error("no admissible sample points in the sampling box")]
    NoSamples,
    #[error("{0}")]
    Format(String),
}

/// Half-open coordinate interval `[lo, hi)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }

    /// Distance from `x` to the interval; zero inside.
    pub fn distance(&self, x: f64) -> f64 {
        if x < self.lo {
            self.lo - x
        } else if x >= self.hi {
            x - self.hi
        } else {
            0.0
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Ball `|x_coordinate − center| < radius` removed from sampling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub coordinate: usize,
    pub center: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    /// Chart intervals; flows that leave them (after identifications) escape.
    pub intervals: Vec<Interval>,
    /// Box from which sample points are drawn.
    pub sample_box: Vec<Interval>,
    pub exclusions: Vec<Exclusion>,
}

impl Domain {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Domain {
            sample_box: intervals.clone(),
            intervals,
            exclusions: Vec::new(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.intervals.iter().zip(p).all(|(iv, x)| iv.contains(*x))
    }

    pub fn excluded(&self, p: &[f64]) -> bool {
        self.exclusions
            .iter()
            .any(|e| (p[e.coordinate] - e.center).abs() < e.radius)
    }

    pub fn admissible(&self, p: &[f64]) -> bool {
        self.sample_box.iter().zip(p).all(|(iv, x)| *x >= iv.lo && *x <= iv.hi) && !self.excluded(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentificationKind {
    Translation,
    General,
}

/// A coordinate map `x ~ γ(x)` generating the quotient.
#[derive(Clone, Debug)]
pub struct Identification {
    pub name: String,
    pub kind: IdentificationKind,
    map: Vec<Expr>,
    progs: Vec<Program>,
    jac: Vec<Program>,
    /// Constant shift, for translations.
    pub offset: Option<Vec<f64>>,
}

impl Identification {
    pub fn new(name: &str, kind: IdentificationKind, map: Vec<Expr>, probe: &[f64]) -> Result<Self, SpecError> {
        let n = map.len();
        let map: Vec<Expr> = map.iter().map(Expr::simplify).collect();
        let mut jac = Vec::with_capacity(n * n);
        for e in &map {
            for j in 0..n {
                jac.push(e.differentiate(j).compile());
            }
        }
        let progs: Vec<Program> = map.iter().map(Expr::compile).collect();
        let offset = match kind {
            IdentificationKind::General => None,
            IdentificationKind::Translation => {
                let identity_jac = (0..n).all(|i| {
                    (0..n).all(|j| jac[i * n + j].as_const() == Some(if i == j { 1.0 } else { 0.0 }))
                });
                if !identity_jac {
                    return Err(SpecError::NotTranslation { name: name.into() });
                }
                let image = progs
                    .iter()
                    .map(|p| p.eval(probe))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|source| SpecError::Eval {
                        context: format!("identification `{name}`"),
                        source,
                    })?;
                Some(image.iter().zip(probe).map(|(a, b)| a - b).collect())
            }
        };
        Ok(Identification {
            name: name.into(),
            kind,
            map,
            progs,
            jac,
            offset,
        })
    }

    pub fn map(&self) -> &[Expr] {
        &self.map
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, DomainError> {
        if let Some(off) = &self.offset {
            return Ok(x.iter().zip(off).map(|(a, b)| a + b).collect());
        }
        self.progs.iter().map(|p| p.eval(x)).collect()
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>, DomainError> {
        let n = self.map.len();
        if self.offset.is_some() {
            return Ok(DMatrix::identity(n, n));
        }
        let vals = self.jac.iter().map(|p| p.eval(x)).collect::<Result<Vec<_>, _>>()?;
        Ok(DMatrix::from_row_slice(n, n, &vals))
    }

    /// Solves `γ(y) = x` by Newton iteration from `y = x`.
    pub fn inverse(&self, x: &[f64]) -> Option<Vec<f64>> {
        if let Some(off) = &self.offset {
            return Some(x.iter().zip(off).map(|(a, b)| a - b).collect());
        }
        let mut y = x.to_vec();
        for _ in 0..50 {
            let r: Vec<f64> = self.apply(&y).ok()?.iter().zip(x).map(|(a, b)| a - b).collect();
            let j = self.jacobian(&y).ok()?;
            let step = j.lu().solve(&DVector::from_vec(r))?;
            let mut size = 0.0f64;
            for (yi, si) in y.iter_mut().zip(step.iter()) {
                *yi -= si;
                size = size.max(si.abs() / (1.0 + yi.abs()));
            }
            if size < 1e-15 {
                return Some(y);
            }
        }
        let r = self.apply(&y).ok()?;
        let err = r.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        (err < 1e-10).then_some(y)
    }

    /// Applies `γ` (or `γ⁻¹`) returning the image and the differential of
    /// the applied map at `x`.
    pub fn act(&self, x: &[f64], inverse: bool) -> Option<(Vec<f64>, DMatrix<f64>)> {
        if inverse {
            let y = self.inverse(x)?;
            let j = self.jacobian(&y).ok()?.try_inverse()?;
            Some((y, j))
        } else {
            Some((self.apply(x).ok()?, self.jacobian(x).ok()?))
        }
    }
}

/// One identification step recorded during wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AppliedMap {
    pub identification: usize,
    pub inverse: bool,
    pub count: u32,
}

/// Result of bringing a point into the fundamental domain.
#[derive(Clone, Debug)]
pub struct Wrap {
    pub point: Vec<f64>,
    /// Differential of the composed identification maps.
    pub jacobian: DMatrix<f64>,
    pub applied: Vec<AppliedMap>,
}

/// A closed curve given by segments `τ ∈ [0,1] ↦ x(τ)`.
#[derive(Clone, Debug)]
pub struct Loop {
    pub name: String,
    segments: Vec<Segment>,
}

#[derive(Clone, Debug)]
pub struct Segment {
    exprs: Vec<Expr>,
    progs: Vec<Program>,
    dprogs: Vec<Program>,
}

impl Segment {
    pub fn new(exprs: Vec<Expr>) -> Self {
        let exprs: Vec<Expr> = exprs.iter().map(Expr::simplify).collect();
        Segment {
            progs: exprs.iter().map(Expr::compile).collect(),
            dprogs: exprs.iter().map(|e| e.differentiate(0).compile()).collect(),
            exprs,
        }
    }

    pub fn exprs(&self) -> &[Expr] {
        &self.exprs
    }

    pub fn point(&self, tau: f64) -> Result<Vec<f64>, DomainError> {
        self.progs.iter().map(|p| p.eval(&[tau])).collect()
    }

    pub fn tangent(&self, tau: f64) -> Result<Vec<f64>, DomainError> {
        self.dprogs.iter().map(|p| p.eval(&[tau])).collect()
    }

    /// The same curve traversed backwards.
    pub fn reversed(&self) -> Segment {
        let flip = Expr::Const(1.0) - Expr::Var(0);
        Segment::new(self.exprs.iter().map(|e| e.substitute(std::slice::from_ref(&flip))).collect())
    }
}

impl Loop {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn reversed(&self) -> Loop {
        Loop {
            name: format!("{}^-1", self.name),
            segments: self.segments.iter().rev().map(Segment::reversed).collect(),
        }
    }

    /// Concatenation `self · other`; both must be closed in the quotient.
    pub fn concat(&self, other: &Loop) -> Loop {
        Loop {
            name: format!("{}*{}", self.name, other.name),
            segments: self.segments.iter().chain(&other.segments).cloned().collect(),
        }
    }
}

/// Coordinate description of a semi-Riemannian manifold.
#[derive(Clone, Debug)]
pub struct ManifoldSpec {
    pub coords: Vec<String>,
    metric_rows: Vec<Vec<Expr>>,
    metric: MetricField,
    asymmetric_pairs: Vec<(usize, usize)>,
    pub domain: Domain,
    pub identifications: Vec<Identification>,
    pub loops: Vec<Loop>,
    leaf_function: Option<ScalarField>,
}

/// Facts established by [`ManifoldSpec::validate`].
#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub samples: usize,
    /// Number of negative directions of the metric.
    pub index: usize,
    pub max_isometry_residual: f64,
}

impl ManifoldSpec {
    pub fn new(coords: Vec<String>, metric: Vec<Vec<Expr>>, domain: Domain) -> Result<Self, SpecError> {
        let n = coords.len();
        if n < 2 {
            return Err(SpecError::Dimension(n));
        }
        for (i, c) in coords.iter().enumerate() {
            let valid = c.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
                && !crate::expr::RESERVED.contains(&c.as_str());
            if !valid {
                return Err(SpecError::BadCoordinate(c.clone()));
            }
            if coords[..i].contains(c) {
                return Err(SpecError::DuplicateCoordinate(c.clone()));
            }
        }
        if metric.len() != n {
            return Err(SpecError::Count {
                what: "metric rows",
                expected: n,
                found: metric.len(),
            });
        }
        if let Some(row) = metric.iter().find(|r| r.len() != n) {
            return Err(SpecError::Count {
                what: "metric columns",
                expected: n,
                found: row.len(),
            });
        }
        for (what, ivs) in [("domain intervals", &domain.intervals), ("sample box intervals", &domain.sample_box)] {
            if ivs.len() != n {
                return Err(SpecError::Count {
                    what,
                    expected: n,
                    found: ivs.len(),
                });
            }
            for (c, iv) in coords.iter().zip(ivs.iter()) {
                if !(iv.lo < iv.hi) {
                    return Err(SpecError::Interval {
                        coordinate: c.clone(),
                        lo: iv.lo,
                        hi: iv.hi,
                    });
                }
            }
        }
        for (c, iv) in coords.iter().zip(&domain.sample_box) {
            if !iv.is_bounded() {
                return Err(SpecError::Interval {
                    coordinate: c.clone(),
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
        }
        if let Some(e) = domain.exclusions.iter().find(|e| e.coordinate >= n) {
            return Err(SpecError::BadExclusion(e.coordinate.to_string()));
        }
        let rows: Vec<Vec<Expr>> = metric
            .iter()
            .map(|r| r.iter().map(Expr::simplify).collect())
            .collect();
        let mut asymmetric_pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rows[i][j] != rows[j][i] {
                    asymmetric_pairs.push((i, j));
                }
            }
        }
        Ok(ManifoldSpec {
            metric: MetricField::new(&rows),
            metric_rows: rows,
            asymmetric_pairs,
            coords,
            domain,
            identifications: Vec::new(),
            loops: Vec::new(),
            leaf_function: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn metric_rows(&self) -> &[Vec<Expr>] {
        &self.metric_rows
    }

    pub fn leaf_function(&self) -> Option<&ScalarField> {
        self.leaf_function.as_ref()
    }

    pub fn with_leaf_function(mut self, h: Expr) -> Self {
        self.leaf_function = Some(ScalarField::new(h, self.dim()));
        self
    }

    pub fn with_identification(mut self, name: &str, kind: IdentificationKind, map: Vec<Expr>) -> Result<Self, SpecError> {
        if map.len() != self.dim() {
            return Err(SpecError::Count {
                what: "identification components",
                expected: self.dim(),
                found: map.len(),
            });
        }
        let probe: Vec<f64> = self
            .domain
            .sample_box
            .iter()
            .map(|iv| 0.5 * (iv.lo + iv.hi))
            .collect();
        self.identifications.push(Identification::new(name, kind, map, &probe)?);
        Ok(self)
    }

    /// Adds a loop; segments are expressions in a single parameter `τ`
    /// (variable index 0). Closure is checked modulo identifications.
    pub fn with_loop(mut self, name: &str, segments: Vec<Vec<Expr>>) -> Result<Self, SpecError> {
        let n = self.dim();
        if segments.is_empty() {
            return Err(SpecError::Count {
                what: "loop segments",
                expected: 1,
                found: 0,
            });
        }
        let segments: Vec<Segment> = segments
            .into_iter()
            .map(|s| {
                if s.len() != n {
                    Err(SpecError::Count {
                        what: "loop components",
                        expected: n,
                        found: s.len(),
                    })
                } else {
                    Ok(Segment::new(s))
                }
            })
            .collect::<Result<_, _>>()?;
        let eval = |r: Result<Vec<f64>, DomainError>| {
            r.map_err(|source| SpecError::Eval {
                context: format!("loop `{name}`"),
                source,
            })
        };
        for k in 0..segments.len() {
            let end = eval(segments[k].point(1.0))?;
            let next = eval(segments[(k + 1) % segments.len()].point(0.0))?;
            let gap = self.gap_modulo_identifications(&end, &next);
            if gap > 1e-9 * (1.0 + inf_norm(&next)) {
                return Err(SpecError::LoopNotClosed {
                    name: name.into(),
                    segment: k,
                    gap,
                });
            }
        }
        self.loops.push(Loop {
            name: name.into(),
            segments,
        });
        Ok(self)
    }

    /// `min |c(a) − b|_∞` over `c ∈ {id, γ_i, γ_i⁻¹}`.
    pub fn gap_modulo_identifications(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut best = linf(a, b);
        for ident in &self.identifications {
            for inverse in [false, true] {
                let image = if inverse { ident.inverse(a) } else { ident.apply(a).ok() };
                if let Some(image) = image {
                    best = best.min(linf(&image, b));
                }
            }
        }
        best
    }

    /// Periods of coordinates that are pure translations, by coordinate.
    pub fn periods(&self) -> Vec<Option<f64>> {
        let mut out = vec![None; self.dim()];
        for ident in &self.identifications {
            if let Some(off) = &ident.offset {
                let moving: Vec<usize> = (0..off.len()).filter(|&k| off[k] != 0.0).collect();
                if let [k] = moving.as_slice() {
                    out[*k] = Some(off[*k].abs());
                }
            }
        }
        out
    }

    /// Load-time checks at the given samples: symmetry, nondegeneracy,
    /// constant signature, and isometric identifications.
    pub fn validate(&self, samples: &[Vec<f64>]) -> Result<Validation, SpecError> {
        if samples.is_empty() {
            return Err(SpecError::NoSamples);
        }
        let mut index = None;
        let mut first = Vec::new();
        let mut max_iso = 0.0f64;
        for p in samples {
            let g = self.metric_matrix(p)?;
            let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(f64::MIN_POSITIVE);
            for &(i, j) in &self.asymmetric_pairs {
                let a = self.eval_entry(i, j, p)?;
                let b = self.eval_entry(j, i, p)?;
                if (a - b).abs() > 1e-12 * scale {
                    return Err(SpecError::Asymmetric {
                        i,
                        j,
                        residual: (a - b).abs(),
                        point: p.clone(),
                    });
                }
            }
            PointGeometry::new(&self.metric, p, Order::Connection).map_err(|e| match e {
                GeometryError::Domain(source) => SpecError::Eval {
                    context: "metric".into(),
                    source,
                },
                _ => SpecError::Degenerate { point: p.clone() },
            })?;
            let k = index_of(&g);
            match index {
                None => {
                    index = Some(k);
                    first = p.clone();
                }
                Some(expected) if expected != k => {
                    return Err(SpecError::SignatureChange {
                        expected,
                        found: k,
                        first,
                        point: p.clone(),
                    });
                }
                _ => {}
            }
            for ident in &self.identifications {
                let r = self.isometry_residual(ident, p)?;
                max_iso = max_iso.max(r);
                if r > ISOMETRY_TOLERANCE {
                    return Err(SpecError::NotIsometry {
                        name: ident.name.clone(),
                        point: p.clone(),
                        residual: r,
                    });
                }
                if ident.inverse(p).is_none() {
                    return Err(SpecError::NotInvertible {
                        name: ident.name.clone(),
                        point: p.clone(),
                    });
                }
            }
        }
        Ok(Validation {
            samples: samples.len(),
            index: index.unwrap_or(0),
            max_isometry_residual: max_iso,
        })
    }

    /// `max |Dγᵀ g(γx) Dγ − g(x)| / max|g(x)|`.
    pub fn isometry_residual(&self, ident: &Identification, p: &[f64]) -> Result<f64, SpecError> {
        let ctx = |source| SpecError::Eval {
            context: format!("identification `{}`", ident.name),
            source,
        };
        let y = ident.apply(p).map_err(ctx)?;
        let d = ident.jacobian(p).map_err(ctx)?;
        let gx = self.metric_matrix(p)?;
        let gy = self.metric_matrix(&y)?;
        let pulled = d.transpose() * gy * d;
        let scale = gx.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        Ok((pulled - &gx).amax() / scale)
    }

    /// `max |U(γx) − Dγ U(x)|` relative to `max(1, |U(x)|)`.
    pub fn field_invariance_residual(&self, ident: &Identification, field: &VectorField, p: &[f64]) -> Result<f64, SpecError> {
        let ctx = |source| SpecError::Eval {
            context: format!("identification `{}`", ident.name),
            source,
        };
        let y = ident.apply(p).map_err(ctx)?;
        let d = ident.jacobian(p).map_err(ctx)?;
        let ux = field.value(p).map_err(ctx)?;
        let uy = field.value(&y).map_err(ctx)?;
        let pushed = d * DVector::from_vec(ux.clone());
        let diff = pushed
            .iter()
            .zip(&uy)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok(diff / inf_norm(&ux).max(1.0))
    }

    fn eval_entry(&self, i: usize, j: usize, p: &[f64]) -> Result<f64, SpecError> {
        self.metric_rows[i][j].eval(p).map_err(|source| SpecError::Eval {
            context: format!("metric entry ({i},{j})"),
            source,
        })
    }

    pub fn metric_matrix(&self, p: &[f64]) -> Result<DMatrix<f64>, SpecError> {
        let n = self.dim();
        let g = self.metric.value(p).map_err(|source| SpecError::Eval {
            context: "metric".into(),
            source,
        })?;
        Ok(DMatrix::from_row_slice(n, n, &g))
    }

    /// Per-coordinate distance outside the domain; a point on an open
    /// upper end counts as a tiny violation.
    fn violation(&self, y: &[f64]) -> Vec<f64> {
        self.domain
            .intervals
            .iter()
            .zip(y)
            .map(|(iv, &x)| {
                if iv.contains(x) {
                    0.0
                } else {
                    iv.distance(x).max(f64::MIN_POSITIVE)
                }
            })
            .collect()
    }

    /// Brings `x` into the fundamental domain by repeatedly applying the
    /// identification (or inverse) whose image has the lexicographically
    /// smallest violation vector. `None` when no map helps: the point has
    /// left the chart.
    pub fn normalize(&self, x: &[f64]) -> Option<Wrap> {
        let n = self.dim();
        let mut y = x.to_vec();
        let mut jac = DMatrix::identity(n, n);
        let mut applied: Vec<AppliedMap> = Vec::new();
        for _ in 0..MAX_WRAPS {
            let here = self.violation(&y);
            let Some(k) = here.iter().position(|&v| v > 0.0) else {
                return Some(Wrap {
                    point: y,
                    jacobian: jac,
                    applied,
                });
            };
            let lex_less = |a: &[f64], b: &[f64]| a.partial_cmp(b) == Some(std::cmp::Ordering::Less);
            let mut best: Option<Candidate> = None;
            for (idx, ident) in self.identifications.iter().enumerate() {
                for inverse in [false, true] {
                    let Some((z, d)) = ident.act(&y, inverse) else {
                        continue;
                    };
                    let there = self.violation(&z);
                    if lex_less(&there, &here) && best.as_ref().is_none_or(|b| lex_less(&there, &b.4)) {
                        best = Some((idx, inverse, z, d, there));
                    }
                }
            }
            let (idx, inverse, z, d, _) = best?;
            let ident = &self.identifications[idx];
            let iv = self.domain.intervals[k];
            match &ident.offset {
                Some(off) if off[k] != 0.0 && iv.lo.is_finite() => {
                    // jump straight to the right sheet
                    let period = off[k].abs();
                    let m = ((y[k] - iv.lo) / period).floor();
                    let j = -m * off[k].signum();
                    for (yi, oi) in y.iter_mut().zip(off) {
                        *yi += j * oi;
                    }
                    if !iv.contains(y[k]) {
                        // rounding at the boundary
                        y[k] = if y[k] < iv.lo { iv.lo } else { y[k] - period };
                    }
                    push_applied(&mut applied, idx, j < 0.0, j.abs() as u32);
                }
                _ => {
                    y = z;
                    jac = d * jac;
                    push_applied(&mut applied, idx, inverse, 1);
                }
            }
        }
        None
    }
}

fn push_applied(applied: &mut Vec<AppliedMap>, identification: usize, inverse: bool, count: u32) {
    if count == 0 {
        return;
    }
    if let Some(last) = applied.last_mut() {
        if last.identification == identification && last.inverse == inverse {
            last.count += count;
            return;
        }
    }
    applied.push(AppliedMap {
        identification,
        inverse,
        count,
    });
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
