use super::{frame_bilinear, midrange, ClassifyError};
use crate::geometry::{
    hessian_at, FramePair, ManifoldSpec, Order, PointGeometry, PointSample, ScalarField, NULL_TOLERANCE,
};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HessianKind {
    Zero,
    ATimesG,
    AGPlusBEe,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianClass {
    pub kind: HessianKind,
    /// Fitted `a` per sample for the chosen kind (zero for `Zero`).
    pub a: Vec<f64>,
    /// Fitted `b` per sample (zero unless `AGPlusBEe`).
    pub b: Vec<f64>,
    /// Max residual of the chosen kind.
    pub residual: f64,
    /// Max residuals of `Zero`, `ATimesG`, `AGPlusBEe`, relative to `|grad f|`.
    pub residuals: [f64; 3],
}

struct Fit {
    zero: f64,
    ag: (f64, f64),
    agb: (f64, f64, f64),
}

fn fit_point(geom: &PointGeometry, f: &ScalarField) -> Result<Fit, ClassifyError> {
    let grad = geom.raise(&f.partials(&geom.point).map_err(|e| ClassifyError::Geometry(e.into()))?);
    let frame = FramePair::new(geom, &grad, NULL_TOLERANCE).map_err(|e| match e {
        crate::geometry::GeometryError::NullField { point, norm_sq } => ClassifyError::NullGradient { point, norm_sq },
        other => other.into(),
    })?;
    let n = geom.n;
    let h = frame_bilinear(&frame, &hessian_at(geom, f)?);
    let signs: Vec<f64> = frame.vectors().map(|(_, s)| s).collect();
    let scale = frame.lambda;

    let zero = h.iter().fold(0.0f64, |m, x| m.max(x.abs())) / scale;

    let fit_with = |a: f64, skip_ee: bool| {
        let mut r = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if skip_ee && i == 0 && j == 0 {
                    continue;
                }
                let model = if i == j { a * signs[i] } else { 0.0 };
                r = r.max((h[(i, j)] - model).abs());
            }
        }
        r / scale
    };
    let (a_all, _) = midrange((0..n).map(|i| signs[i] * h[(i, i)]));
    let (a_perp, _) = midrange((1..n).map(|i| signs[i] * h[(i, i)]));
    let b = h[(0, 0)] - a_perp * signs[0];
    Ok(Fit {
        zero,
        ag: (a_all, fit_with(a_all, false)),
        agb: (a_perp, b, fit_with(a_perp, true)),
    })
}

/// Classifies `H^f` as `0`, `a·g`, `a·g + b E*⊗E*` or general, choosing the
/// most special kind whose residual stays below `tol` at every sample.
pub fn hessian_classify(m: &ManifoldSpec, f: &ScalarField, samples: &[PointSample], tol: f64) -> Result<HessianClass, ClassifyError> {
    if samples.is_empty() {
        return Err(ClassifyError::EmptySamples);
    }
    let fits: Vec<Fit> = samples
        .par_iter()
        .map(|p| {
            let geom = PointGeometry::new(m.metric(), &p.coords, Order::Connection)?;
            fit_point(&geom, f)
        })
        .collect::<Result<_, _>>()?;
    let worst = |r: fn(&Fit) -> f64| fits.iter().map(r).fold(0.0f64, |m, x| if x.is_nan() { f64::INFINITY } else { m.max(x) });
    let residuals = [worst(|f| f.zero), worst(|f| f.ag.1), worst(|f| f.agb.2)];
    let n = fits.len();
    let (kind, a, b, residual) = if residuals[0] < tol {
        (HessianKind::Zero, vec![0.0; n], vec![0.0; n], residuals[0])
    } else if residuals[1] < tol {
        (HessianKind::ATimesG, fits.iter().map(|f| f.ag.0).collect(), vec![0.0; n], residuals[1])
    } else if residuals[2] < tol {
        (
            HessianKind::AGPlusBEe,
            fits.iter().map(|f| f.agb.0).collect(),
            fits.iter().map(|f| f.agb.1).collect(),
            residuals[2],
        )
    } else {
        (HessianKind::General, vec![0.0; n], vec![0.0; n], residuals[2])
    };
    Ok(HessianClass {
        kind,
        a,
        b,
        residual,
        residuals,
    })
}
