//! Metric tensor machinery.
//!
//! Conventions: `R(X, Y)Z = ∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_[X,Y] Z`,
//! `K(v, w) = g(R(v,w)w, v) / (g(v,v)g(w,w) − g(v,w)²)`,
//! `Ric(v) = Σ_i ε_i g(R(e_i, v)v, e_i)` and `△f = div grad f`.

mod eval;
mod fields;
mod frame;
mod jet;
mod manifold;
mod ops;
mod point;

pub use eval::{unit_field_jet, UnitFieldJet, VectorFieldEval, NULL_TOLERANCE};
pub use fields::{MetricField, MetricJet, ScalarField, VectorField};
pub use frame::{FramePair, SKIP_THRESHOLD};
pub use jet::{ScalarJet, VecJet};
pub use manifold::{
    AppliedMap, Domain, Exclusion, Identification, IdentificationKind, Interval, Loop, ManifoldSpec, Segment,
    SpecError, Validation, Wrap, ISOMETRY_TOLERANCE,
};
pub use ops::{
    christoffel, divergence, gradient, hessian, hessian_at, laplacian, lie_derivative_metric, orthogonal_frame,
    ricci_bilinear, ricci_quadratic, riemann, sectional, sectional_at, Tensor3, Tensor4,
};
pub use point::{index_of, Order, PointGeometry, DEGENERACY_THRESHOLD};

use crate::expr::DomainError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("metric is degenerate at {point:?} (smallest |eigenvalue| {min_eigenvalue:e}, largest |g_ij| {scale:e})")]
    Degenerate { point: Vec<f64>, min_eigenvalue: f64, scale: f64 },
    #[error("plane is degenerate: g(v,v)g(w,w) - g(v,w)^2 = {gram:e}")]
    DegeneratePlane { gram: f64 },
    #[error("field is null or nearly null at {point:?}: g(U,U) = {norm_sq:e}")]
    NullField { point: Vec<f64>, norm_sq: f64 },
    #[error("could not complete an orthonormal frame at {point:?}")]
    FrameIncomplete { point: Vec<f64> },
}

/// A sample point with an optional quadrature weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub coords: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl PointSample {
    pub fn new(coords: Vec<f64>) -> Self {
        PointSample { coords, weight: None }
    }
}

impl AsRef<[f64]> for PointSample {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

impl From<Vec<f64>> for PointSample {
    fn from(coords: Vec<f64>) -> Self {
        PointSample::new(coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};

    pub(crate) fn manifold(coords: &[&str], rows: &[&[&str]], box_: &[(f64, f64)]) -> ManifoldSpec {
        let names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let metric: Vec<Vec<Expr>> = rows
            .iter()
            .map(|r| r.iter().map(|t| parse(t, coords).unwrap()).collect())
            .collect();
        let domain = Domain::new(box_.iter().map(|&(a, b)| Interval::new(a, b)).collect());
        ManifoldSpec::new(names, metric, domain).unwrap()
    }

    fn field(coords: &[&str], comps: &[&str]) -> VectorField {
        VectorField::new(comps.iter().map(|t| parse(t, coords).unwrap()).collect())
    }

    #[test]
    fn minkowski_connection_vanishes() {
        let m = manifold(&["t", "x"], &[&["-1", "0"], &["0", "1"]], &[(-1.0, 1.0); 2]);
        let c = christoffel(&m, &[0.3, 0.1]).unwrap();
        assert!(c.data.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn exponential_warp_symbols() {
        let m = manifold(
            &["t", "x", "y"],
            &[&["-1", "0", "0"], &["0", "exp(2*t)", "0"], &["0", "0", "exp(2*t)"]],
            &[(-1.0, 1.0); 3],
        );
        let t = 0.4f64;
        let c = christoffel(&m, &[t, 0.2, -0.3]).unwrap();
        assert!((c.get(0, 1, 1) - (2.0 * t).exp()).abs() < 1e-14);
        assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-14);
        assert_eq!(c.get(1, 0, 1), c.get(1, 1, 0));
    }

    #[test]
    fn null_field_is_rejected() {
        let m = manifold(&["t", "x"], &[&["-1", "0"], &["0", "1"]], &[(-1.0, 1.0); 2]);
        let err = orthogonal_frame(&m, &[0.0, 0.0], &field(&["t", "x"], &["1", "1"])).unwrap_err();
        assert!(matches!(err, GeometryError::NullField { norm_sq, .. } if norm_sq == 0.0));
    }

    #[test]
    fn frame_for_scaled_euclidean_field() {
        let m = manifold(&["x", "y"], &[&["1", "0"], &["0", "1"]], &[(-1.0, 1.0); 2]);
        let f = orthogonal_frame(&m, &[0.0, 0.0], &field(&["x", "y"], &["2", "0"])).unwrap();
        assert_eq!(f.lambda, 2.0);
        assert_eq!(f.e, vec![1.0, 0.0]);
        assert_eq!(f.e_perp, vec![vec![0.0, 1.0]]);
        assert_eq!(f.eps, 1.0);
    }

    #[test]
    fn translation_wrap_jumps_sheets() {
        let m = manifold(&["t", "x"], &[&["-1", "0"], &["0", "1"]], &[(-10.0, 10.0), (0.0, 1.0)])
            .with_identification("shift", IdentificationKind::Translation, vec![Expr::Var(0), Expr::Var(1) + Expr::Const(1.0)])
            .unwrap();
        let w = m.normalize(&[0.5, 7.25]).unwrap();
        assert!((w.point[1] - 0.25).abs() < 1e-12);
        assert_eq!(w.applied, vec![AppliedMap { identification: 0, inverse: true, count: 7 }]);
        let w = m.normalize(&[0.5, -2.5]).unwrap();
        assert!((w.point[1] - 0.5).abs() < 1e-12);
        assert!(m.normalize(&[11.0, 0.5]).is_none());
    }
}
