//! Pointwise hypothesis tests for a vector field `U` and the decomposition
//! type they predict.
//!
//! All tensorial residuals are measured in the orthonormal frame adapted to
//! `U`, so they do not depend on the chart. Residuals of quantities that
//! are linear in `U` are divided by `λ = |g(U,U)|^{1/2}`; flags are then
//! unchanged under `U ↦ cU`.

mod hessian;
mod identities;

pub use hessian::{hessian_classify, HessianClass, HessianKind};
pub use identities::{
    curvature_conditions, gen_gr_check, gen_gr_check_normalized, CurvatureReport, GenGrReport, IdentitySample,
    SignPattern,
};

use crate::geometry::{FramePair, GeometryError, ManifoldSpec, PointGeometry, PointSample, VectorField, VectorFieldEval};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Error)]
pub enum ClassifyError {
    #[error("no sample points")]
    EmptySamples,
    #[error("field is null or nearly null at {point:?}: g(U,U) = {norm_sq:e}")]
    NullField { point: Vec<f64>, norm_sq: f64 },
    #[error("gradient is null or nearly null at {point:?}: g(grad f, grad f) = {norm_sq:e}")]
    NullGradient { point: Vec<f64>, norm_sq: f64 },
    #[error("field is not unit: |λ − 1| = {deviation:e} at {point:?}")]
    NonUnit { point: Vec<f64>, deviation: f64 },
    #[error("inconsistent flags: {0}")]
    InconsistentFlags(String),
    #[error(transparent)]
    Geometry(GeometryError),
}

impl From<GeometryError> for ClassifyError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::NullField { point, norm_sq } => ClassifyError::NullField { point, norm_sq },
            other => ClassifyError::Geometry(other),
        }
    }
}

/// Where a flag fails over the sample set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Nowhere,
    Somewhere,
    Everywhere,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagResult {
    pub holds: bool,
    pub max_residual: f64,
    /// Number of samples with residual at or above tolerance.
    pub failures: usize,
    /// Extent of failure.
    pub fails: Extent,
    /// Sample with the largest residual.
    pub witness: Vec<f64>,
}

impl FlagResult {
    pub fn from_residuals(residuals: &[f64], points: &[&[f64]], tol: f64) -> Self {
        let mut worst = 0usize;
        let mut failures = 0;
        for (i, r) in residuals.iter().enumerate() {
            if !(*r < tol) {
                failures += 1;
            }
            let cur = residuals[worst];
            if r.is_nan() || (!cur.is_nan() && *r > cur) {
                worst = i;
            }
        }
        let fails = match failures {
            0 => Extent::Nowhere,
            f if f == residuals.len() => Extent::Everywhere,
            _ => Extent::Somewhere,
        };
        FlagResult {
            holds: failures == 0,
            max_residual: residuals.get(worst).copied().unwrap_or(0.0),
            failures,
            fails,
            witness: points.get(worst).map(|p| p.to_vec()).unwrap_or_default(),
        }
    }
}

/// Fitted pointwise factor with its range over the samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorSamples {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

impl FactorSamples {
    fn new(values: Vec<f64>) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        FactorSamples { values, min, max }
    }
}

/// Fit of `∇_X U = aX + b g(X,E)E`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NablaForm {
    pub a: FactorSamples,
    pub b: FactorSamples,
    pub fit: FlagResult,
    /// `b ≈ 0` at every sample (relative to `λ`).
    pub b_vanishes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub tolerance: f64,
    pub samples: usize,
    pub never_null: bool,
    /// Smallest `|g(U,U)|` over the samples.
    pub min_abs_norm_sq: f64,
    pub eps: f64,
    pub unit: FlagResult,
    pub pregeodesic: FlagResult,
    pub geodesic_unit: FlagResult,
    pub irrotational: FlagResult,
    pub orth_irrotational: FlagResult,
    pub conformal: FlagResult,
    /// `a` with `L_U g = 2a g`.
    pub conformal_factor: FactorSamples,
    pub orth_conformal: FlagResult,
    /// `ρ` with `L_U g = ρ g` on `E⊥`.
    pub orth_conformal_factor: FactorSamples,
    pub parallel: FlagResult,
    pub nabla_form: NablaForm,
    pub grad_div_e_parallel_e: FlagResult,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DecompositionType {
    Direct,
    Warped,
    Twisted,
    Parametrized,
}

impl std::fmt::Display for DecompositionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DecompositionType::Direct => "Direct",
            DecompositionType::Warped => "Warped",
            DecompositionType::Twisted => "Twisted",
            DecompositionType::Parametrized => "Parametrized",
        })
    }
}

/// Frame components `B(f_a, f_b)` of a bilinear form given in coordinates.
pub(crate) fn frame_bilinear(frame: &FramePair, b: &DMatrix<f64>) -> DMatrix<f64> {
    let vs: Vec<&[f64]> = frame.vectors().map(|(v, _)| v).collect();
    let n = vs.len();
    DMatrix::from_fn(n, n, |a, c| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += b[(i, j)] * vs[a][i] * vs[c][j];
            }
        }
        s
    })
}

/// Chebyshev fit of a constant to `values`: midrange and max deviation.
pub(crate) fn midrange(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return (0.0, 0.0);
    }
    (0.5 * (lo + hi), 0.5 * (hi - lo))
}

/// Residual of `B = c·g` on the frame indices `range`, with `c` fitted.
fn conformal_fit(bf: &DMatrix<f64>, signs: &[f64], range: std::ops::Range<usize>) -> (f64, f64) {
    let (c, spread) = midrange(range.clone().map(|a| signs[a] * bf[(a, a)]));
    let mut off = 0.0f64;
    for a in range.clone() {
        for b in range.clone() {
            if a != b {
                off = off.max(bf[(a, b)].abs());
            }
        }
    }
    (c, spread.max(off))
}

/// Per-sample residuals and factors.
struct PointFlags {
    norm_sq: f64,
    eps: f64,
    unit: f64,
    pregeodesic: f64,
    geodesic_unit: f64,
    irrotational: f64,
    orth_irrotational: f64,
    conformal: f64,
    a: f64,
    orth_conformal: f64,
    rho: f64,
    parallel: f64,
    nabla_a: f64,
    nabla_b: f64,
    nabla_fit: f64,
    grad_div_e: f64,
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0f64, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn point_flags(v: &VectorFieldEval) -> PointFlags {
    let n = v.n();
    let g: &PointGeometry = &v.geom;
    let frame = &v.frame;
    let lam = v.lambda.v;
    let signs: Vec<f64> = frame.vectors().map(|(_, s)| s).collect();

    // M_ab = g(∇_{f_a} U, f_b)
    let m_coord = &g.g * &v.nabla_u;
    let mf = frame_bilinear(frame, &m_coord.transpose());
    let parallel = max_abs(mf.iter().copied()) / lam;

    let half_lie = (&mf + mf.transpose()) * 0.5;
    let (a, conformal) = conformal_fit(&half_lie, &signs, 0..n);
    let (half_rho, orth_conformal) = conformal_fit(&half_lie, &signs, 1..n);

    let dw = frame_bilinear(frame, &v.d_omega());
    let irrotational = max_abs(dw.iter().copied()) / lam;
    let orth_irrotational = max_abs((1..n).flat_map(|a| (1..n).map(move |b| (a, b))).map(|(a, b)| dw[(a, b)])) / lam;

    let acc = v.acceleration();
    let geodesic_unit = max_abs(frame.components(g, &acc).into_iter());
    let nabla_uu = v.nabla_u_along(&v.u.v);
    let uu_perp = frame.components(g, &nabla_uu);
    let pregeodesic = max_abs(uu_perp.into_iter().skip(1)) / (lam * lam);

    // T_ab = frame component along f_b of ∇_{f_a} U
    let t = DMatrix::from_fn(n, n, |ai, bi| signs[bi] * mf[(ai, bi)]);
    let nabla_a = if n > 1 {
        (1..n).map(|i| t[(i, i)]).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let nabla_b = v.eps * (t[(0, 0)] - nabla_a);
    let mut fit = 0.0f64;
    for ai in 0..n {
        for bi in 0..n {
            let model = if ai != bi {
                0.0
            } else if ai == 0 {
                nabla_a + nabla_b * v.eps
            } else {
                nabla_a
            };
            fit = fit.max((t[(ai, bi)] - model).abs());
        }
    }

    let gde = frame.components(g, &v.grad_div_e());
    let grad_div_e = max_abs(gde.into_iter().skip(1));

    PointFlags {
        norm_sq: v.norm_sq.v,
        eps: v.eps,
        unit: (lam - 1.0).abs(),
        pregeodesic,
        geodesic_unit,
        irrotational,
        orth_irrotational,
        conformal: conformal / lam,
        a,
        orth_conformal: orth_conformal / lam,
        rho: 2.0 * half_rho,
        parallel,
        nabla_a,
        nabla_b,
        nabla_fit: fit / lam,
        grad_div_e,
    }
}

/// Evaluates the field at every sample in parallel, preserving order.
pub(crate) fn evaluate_all(m: &ManifoldSpec, u: &VectorField, samples: &[PointSample]) -> Result<Vec<VectorFieldEval>, ClassifyError> {
    if samples.is_empty() {
        return Err(ClassifyError::EmptySamples);
    }
    samples
        .par_iter()
        .map(|p| VectorFieldEval::new(m, u, &p.coords).map_err(ClassifyError::from))
        .collect()
}

pub fn classify_field(m: &ManifoldSpec, u: &VectorField, samples: &[PointSample], tol: f64) -> Result<Classification, ClassifyError> {
    let evals = evaluate_all(m, u, samples)?;
    Ok(classify_evals(&evals, tol))
}

pub(crate) fn classify_evals(evals: &[VectorFieldEval], tol: f64) -> Classification {
    let flags: Vec<PointFlags> = evals.par_iter().map(point_flags).collect();
    let points: Vec<&[f64]> = evals.iter().map(|e| e.point()).collect();
    let flag = |f: fn(&PointFlags) -> f64| {
        let r: Vec<f64> = flags.iter().map(f).collect();
        FlagResult::from_residuals(&r, &points, tol)
    };
    let eps = flags[0].eps;
    let never_null = flags.iter().all(|f| f.eps == eps);
    let nabla_fit = flag(|f| f.nabla_fit);
    let b_vanishes = flags
        .iter()
        .zip(evals)
        .all(|(f, e)| f.nabla_b.abs() / e.lambda.v < tol);
    Classification {
        tolerance: tol,
        samples: evals.len(),
        never_null,
        min_abs_norm_sq: flags.iter().map(|f| f.norm_sq.abs()).fold(f64::INFINITY, f64::min),
        eps,
        unit: flag(|f| f.unit),
        pregeodesic: flag(|f| f.pregeodesic),
        geodesic_unit: flag(|f| f.geodesic_unit),
        irrotational: flag(|f| f.irrotational),
        orth_irrotational: flag(|f| f.orth_irrotational),
        conformal: flag(|f| f.conformal),
        conformal_factor: FactorSamples::new(flags.iter().map(|f| f.a).collect()),
        orth_conformal: flag(|f| f.orth_conformal),
        orth_conformal_factor: FactorSamples::new(flags.iter().map(|f| f.rho).collect()),
        parallel: flag(|f| f.parallel),
        nabla_form: NablaForm {
            a: FactorSamples::new(flags.iter().map(|f| f.nabla_a).collect()),
            b: FactorSamples::new(flags.iter().map(|f| f.nabla_b).collect()),
            fit: nabla_fit,
            b_vanishes,
        },
        grad_div_e_parallel_e: flag(|f| f.grad_div_e),
    }
}

/// Fit of `∇_X U = aX + b g(X,E)E`: `a` from the `E⊥` diagonal, then `b`
/// from the `E` direction.
pub fn nabla_form_fit(m: &ManifoldSpec, u: &VectorField, samples: &[PointSample], tol: f64) -> Result<NablaForm, ClassifyError> {
    Ok(classify_field(m, u, samples, tol)?.nabla_form)
}

/// Checks the implication chain on computed flags.
pub fn check_consistency(c: &Classification) -> Result<(), ClassifyError> {
    let rules = [
        (c.parallel.holds, c.conformal.holds, "parallel but not conformal"),
        (c.conformal.holds, c.orth_conformal.holds, "conformal but not orthogonally conformal"),
        (c.irrotational.holds, c.orth_irrotational.holds, "irrotational but not orthogonally irrotational"),
    ];
    for (premise, conclusion, what) in rules {
        if premise && !conclusion {
            return Err(ClassifyError::InconsistentFlags(what.into()));
        }
    }
    Ok(())
}

pub fn decomposition_type(c: &Classification) -> Result<DecompositionType, ClassifyError> {
    check_consistency(c)?;
    Ok(if !c.geodesic_unit.holds {
        DecompositionType::Parametrized
    } else if c.parallel.holds {
        DecompositionType::Direct
    } else if c.irrotational.holds && c.orth_conformal.holds && c.grad_div_e_parallel_e.holds {
        DecompositionType::Warped
    } else if c.irrotational.holds && c.orth_conformal.holds {
        DecompositionType::Twisted
    } else {
        DecompositionType::Parametrized
    })
}
