//! Pointwise tensor operations on a [`ManifoldSpec`].

use super::fields::{ScalarField, VectorField};
use super::frame::FramePair;
use super::manifold::ManifoldSpec;
use super::point::{Order, PointGeometry};
use super::GeometryError;
use crate::geometry::eval::NULL_TOLERANCE;
use nalgebra::DMatrix;

/// Dense rank-3 array, `get(k, i, j)` = `Γ^k_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.n + b) * self.n + c]
    }
}

/// Dense rank-4 array, `get(l, k, i, j)` = `R^l_{kij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.data[((a * n + b) * n + c) * n + d]
    }
}

pub fn christoffel(m: &ManifoldSpec, p: &[f64]) -> Result<Tensor3, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    let n = g.n;
    let mut data = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                data.push(g.gamma(k, i, j));
            }
        }
    }
    Ok(Tensor3 { n, data })
}

pub fn riemann(m: &ManifoldSpec, p: &[f64]) -> Result<Tensor4, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Curvature)?;
    let n = g.n;
    let mut data = Vec::with_capacity(n * n * n * n);
    for l in 0..n {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    data.push(g.riemann(l, k, i, j));
                }
            }
        }
    }
    Ok(Tensor4 { n, data })
}

/// `K(v, w) = g(R(v,w)w, v) / (g(v,v)g(w,w) − g(v,w)²)`.
pub fn sectional(m: &ManifoldSpec, p: &[f64], v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Curvature)?;
    sectional_at(&g, v, w)
}

pub fn sectional_at(g: &PointGeometry, v: &[f64], w: &[f64]) -> Result<f64, GeometryError> {
    let vv = g.dot(v, v);
    let ww = g.dot(w, w);
    let vw = g.dot(v, w);
    let q = vv * ww - vw * vw;
    if !(q.abs() > 1e-12 * (vv.abs() * ww.abs() + vw * vw)) {
        return Err(GeometryError::DegeneratePlane { gram: q });
    }
    Ok(g.dot(&g.curvature_map(v, w, w), v) / q)
}

/// `Ric(X, X)`.
pub fn ricci_quadratic(m: &ManifoldSpec, p: &[f64], x: &[f64]) -> Result<f64, GeometryError> {
    ricci_bilinear(m, p, x, x)
}

pub fn ricci_bilinear(m: &ManifoldSpec, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Curvature)?;
    let ric = g.ricci_tensor();
    let n = g.n;
    let mut s = 0.0;
    for j in 0..n {
        for k in 0..n {
            s += ric[(j, k)] * x[j] * y[k];
        }
    }
    Ok(s)
}

/// `div X = ∂_i X^i + Γ^i_{ik} X^k`.
pub fn divergence(m: &ManifoldSpec, p: &[f64], x: &VectorField) -> Result<f64, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    let jet = x.jet(p, false)?;
    Ok(g.covariant(&jet).trace())
}

pub fn gradient(m: &ManifoldSpec, p: &[f64], f: &ScalarField) -> Result<Vec<f64>, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    Ok(g.raise(&f.partials(p)?))
}

/// `H^f_{ij} = ∂_i ∂_j f − Γ^k_{ij} ∂_k f`.
pub fn hessian(m: &ManifoldSpec, p: &[f64], f: &ScalarField) -> Result<DMatrix<f64>, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    hessian_at(&g, f)
}

pub fn hessian_at(g: &PointGeometry, f: &ScalarField) -> Result<DMatrix<f64>, GeometryError> {
    let n = g.n;
    let jet = f.jet(&g.point, true)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        jet.hess(i, j) - (0..n).map(|k| g.gamma(k, i, j) * jet.d[k]).sum::<f64>()
    }))
}

/// `△f = g^{ij} H^f_{ij}`.
pub fn laplacian(m: &ManifoldSpec, p: &[f64], f: &ScalarField) -> Result<f64, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    let h = hessian_at(&g, f)?;
    Ok(g.ginv.component_mul(&h).sum())
}

pub fn lie_derivative_metric(m: &ManifoldSpec, p: &[f64], x: &VectorField) -> Result<DMatrix<f64>, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    let jet = x.jet(p, false)?;
    Ok(g.lie_metric(&g.covariant(&jet)))
}

pub fn orthogonal_frame(m: &ManifoldSpec, p: &[f64], u: &VectorField) -> Result<FramePair, GeometryError> {
    let g = PointGeometry::new(m.metric(), p, Order::Connection)?;
    FramePair::new(&g, &u.value(p)?, NULL_TOLERANCE)
}
