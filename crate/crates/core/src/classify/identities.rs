use super::{classify_evals, evaluate_all, ClassifyError};
use crate::geometry::{ManifoldSpec, PointSample, VectorField, VectorFieldEval};
use serde::Serialize;

/// Counts of positive, negative and (within tolerance) zero values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SignPattern {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl SignPattern {
    pub fn of(values: impl Iterator<Item = f64>, tol: f64) -> Self {
        let mut s = SignPattern::default();
        for v in values {
            if v.abs() < tol {
                s.zero += 1;
            } else if v > 0.0 {
                s.positive += 1;
            } else {
                s.negative += 1;
            }
        }
        s
    }

    pub fn all_nonnegative(&self) -> bool {
        self.negative == 0
    }
}

/// Both sides of a pointwise identity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentitySample {
    pub point: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentitySample {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    /// `U` irrotational and conformal at the tolerance; the identities are
    /// only claimed in that case.
    pub applicable: bool,
    pub div_u_signs: SignPattern,
    pub ric_u_signs: SignPattern,
    /// `divU` against `n·E(λ)`.
    pub div_identity: Vec<IdentitySample>,
    /// `Ric(U)` against `−(n−1)·U(E(λ))`.
    pub ricci_identity: Vec<IdentitySample>,
    pub max_div_residual: f64,
    pub max_ricci_residual: f64,
}

fn max_residual(s: &[IdentitySample]) -> f64 {
    s.iter().map(IdentitySample::residual).fold(0.0, f64::max)
}

pub fn curvature_conditions(m: &ManifoldSpec, u: &VectorField, samples: &[PointSample], tol: f64) -> Result<CurvatureReport, ClassifyError> {
    let evals = evaluate_all(m, u, samples)?;
    let c = classify_evals(&evals, tol);
    let n = m.dim() as f64;
    let div_identity: Vec<IdentitySample> = evals
        .iter()
        .map(|v| IdentitySample {
            point: v.point().to_vec(),
            lhs: v.div_u(),
            rhs: n * v.e_lambda(),
        })
        .collect();
    let ricci_identity: Vec<IdentitySample> = evals
        .iter()
        .map(|v| IdentitySample {
            point: v.point().to_vec(),
            lhs: v.ricci(&v.u.v),
            rhs: -(n - 1.0) * v.along_e_lambda(&v.u.v),
        })
        .collect();
    Ok(CurvatureReport {
        applicable: c.irrotational.holds && c.conformal.holds,
        div_u_signs: SignPattern::of(div_identity.iter().map(|s| s.lhs), tol),
        ric_u_signs: SignPattern::of(ricci_identity.iter().map(|s| s.lhs), tol),
        max_div_residual: max_residual(&div_identity),
        max_ricci_residual: max_residual(&ricci_identity),
        div_identity,
        ricci_identity,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenGrSample {
    pub point: Vec<f64>,
    pub div_e: f64,
    pub e_div_e: f64,
    pub ric_e: f64,
    pub div_acceleration: f64,
    pub shape_norm_sq: f64,
    /// `|Ric(E) − (div ∇_E E − E(divE) − ‖A‖²)|`.
    pub bochner_residual: f64,
    /// `E(divE) + (divE)²/(n−1)`; nonnegative under the first hypothesis.
    pub gen_gr_margin: f64,
    /// `‖A‖² − (divE)²/(n−1)`.
    pub cauchy_schwarz_gap: f64,
    /// `|tr A − divE|`.
    pub trace_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenGrReport {
    pub orth_irrotational: bool,
    /// `E(divE) ≥ −(divE)²/(n−1)` at every sample, up to tolerance.
    pub divergence_condition: bool,
    /// `Ric(E) ≥ 0` at every sample, up to tolerance.
    pub ricci_nonnegative: bool,
    /// Both inequalities are equalities at every sample.
    pub equality_case: bool,
    pub max_equality_residual: f64,
    pub max_bochner_residual: f64,
    pub min_cauchy_schwarz_gap: f64,
    pub samples: Vec<GenGrSample>,
}

fn gen_gr_sample(v: &VectorFieldEval) -> GenGrSample {
    let n1 = (v.n() - 1) as f64;
    let div_e = v.div_e();
    let e_div_e = v.e_div_e();
    let ric_e = v.ricci(&v.e.v);
    let div_acc = v.div_acceleration();
    let a2 = v.shape_norm_sq();
    GenGrSample {
        point: v.point().to_vec(),
        div_e,
        e_div_e,
        ric_e,
        div_acceleration: div_acc,
        shape_norm_sq: a2,
        bochner_residual: (ric_e - (div_acc - e_div_e - a2)).abs(),
        gen_gr_margin: e_div_e + div_e * div_e / n1,
        cauchy_schwarz_gap: a2 - div_e * div_e / n1,
        trace_residual: (v.shape_trace() - div_e).abs(),
    }
}

fn gen_gr_report(evals: &[VectorFieldEval], tol: f64) -> GenGrReport {
    let c = classify_evals(evals, tol);
    let samples: Vec<GenGrSample> = evals.iter().map(gen_gr_sample).collect();
    let max = |f: fn(&GenGrSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let divergence_condition = samples.iter().all(|s| s.gen_gr_margin > -tol);
    let ricci_nonnegative = samples.iter().all(|s| s.ric_e > -tol);
    let max_equality_residual = max(|s| s.gen_gr_margin.abs().max(s.ric_e.abs()));
    GenGrReport {
        orth_irrotational: c.orth_irrotational.holds,
        divergence_condition,
        ricci_nonnegative,
        equality_case: max_equality_residual < tol,
        max_equality_residual,
        max_bochner_residual: max(|s| s.bochner_residual),
        min_cauchy_schwarz_gap: samples.iter().map(|s| s.cauchy_schwarz_gap).fold(f64::INFINITY, f64::min),
        samples,
    }
}

/// Checks the generalized-GR hypotheses for a unit field `E` and assembles
/// the Bochner-type identity from independently computed terms.
pub fn gen_gr_check(m: &ManifoldSpec, e: &VectorField, samples: &[PointSample], tol: f64) -> Result<GenGrReport, ClassifyError> {
    let evals = evaluate_all(m, e, samples)?;
    for v in &evals {
        let deviation = (v.lambda.v - 1.0).abs();
        if !(deviation < tol) {
            return Err(ClassifyError::NonUnit {
                point: v.point().to_vec(),
                deviation,
            });
        }
    }
    Ok(gen_gr_report(&evals, tol))
}

/// As [`gen_gr_check`], for the unit field `E = U/λ` of a non-unit `U`.
pub fn gen_gr_check_normalized(m: &ManifoldSpec, u: &VectorField, samples: &[PointSample], tol: f64) -> Result<GenGrReport, ClassifyError> {
    let evals = evaluate_all(m, u, samples)?;
    Ok(gen_gr_report(&evals, tol))
}
