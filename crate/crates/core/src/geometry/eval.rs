use super::fields::VectorField;
use super::frame::FramePair;
use super::jet::{ScalarJet, VecJet};
use super::manifold::ManifoldSpec;
use super::point::{Order, PointGeometry};
use super::GeometryError;
use nalgebra::DMatrix;

/// Everything the classifier and the curvature identities need about a
/// field `U` at one point: the unit field `E = U/λ`, `ε`, the covariant
/// derivatives of `U` and `E`, and an adapted frame.
#[derive(Clone, Debug)]
pub struct VectorFieldEval {
    pub geom: PointGeometry,
    pub u: VecJet,
    /// `g(U, U)` with derivatives.
    pub norm_sq: ScalarJet,
    pub eps: f64,
    pub lambda: ScalarJet,
    pub e: VecJet,
    /// `∇U`, column `j` is `∇_{∂_j} U`.
    pub nabla_u: DMatrix<f64>,
    pub nabla_e: DMatrix<f64>,
    /// `∂_m (∇E)` for each `m`.
    pub d_nabla_e: Vec<DMatrix<f64>>,
    pub frame: FramePair,
}

pub const NULL_TOLERANCE: f64 = 1e-12;

impl VectorFieldEval {
    pub fn new(m: &ManifoldSpec, field: &VectorField, p: &[f64]) -> Result<Self, GeometryError> {
        let geom = PointGeometry::new(m.metric(), p, Order::Curvature)?;
        Self::with_geometry(geom, field)
    }

    pub fn with_geometry(geom: PointGeometry, field: &VectorField) -> Result<Self, GeometryError> {
        let n = geom.n;
        let u = field.jet(&geom.point, true)?;
        let frame = FramePair::new(&geom, &u.v, NULL_TOLERANCE)?;

        let comps: Vec<ScalarJet> = (0..n).map(|i| u.component(i)).collect();
        let mut norm_sq = ScalarJet::constant(n, 0.0, true);
        for i in 0..n {
            for j in 0..n {
                let gij = geom.metric_entry_jet(i, j);
                norm_sq = norm_sq.add(&gij.mul(&comps[i]).mul(&comps[j]));
            }
        }
        let eps = frame.eps;
        let lambda = norm_sq.scale(eps).sqrt();
        let e = u.scaled_by(&lambda.recip());

        let nabla_u = geom.covariant(&u);
        let nabla_e = geom.covariant(&e);
        let d_nabla_e = geom.covariant_partials(&e);
        Ok(VectorFieldEval {
            geom,
            u,
            norm_sq,
            eps,
            lambda,
            e,
            nabla_u,
            nabla_e,
            d_nabla_e,
            frame,
        })
    }

    pub fn n(&self) -> usize {
        self.geom.n
    }

    pub fn point(&self) -> &[f64] {
        &self.geom.point
    }

    /// `ω = g(U, ·)`, components `ω_j`.
    pub fn omega(&self) -> Vec<f64> {
        self.geom.lower(&self.u.v)
    }

    /// `∂_i ω_j − ∂_j ω_i`.
    pub fn d_omega(&self) -> DMatrix<f64> {
        let n = self.n();
        let g = &self.geom;
        // ∂_i ω_j = ∂_i g_{jk} U^k + g_{jk} ∂_i U^k
        let d = DMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| g.dg[i][(j, k)] * self.u.v[k] + g.g[(j, k)] * self.u.partial(i, k))
                .sum::<f64>()
        });
        &d - d.transpose()
    }

    pub fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        (0..n).map(|i| (0..n).map(|j| m[(i, j)] * v[j]).sum()).collect()
    }

    /// `∇_X U`.
    pub fn nabla_u_along(&self, x: &[f64]) -> Vec<f64> {
        Self::apply(&self.nabla_u, x)
    }

    /// `∇_X E`.
    pub fn nabla_e_along(&self, x: &[f64]) -> Vec<f64> {
        Self::apply(&self.nabla_e, x)
    }

    /// `∇_E E`.
    pub fn acceleration(&self) -> Vec<f64> {
        self.nabla_e_along(&self.e.v)
    }

    pub fn div_u(&self) -> f64 {
        self.nabla_u.trace()
    }

    pub fn div_e(&self) -> f64 {
        self.nabla_e.trace()
    }

    /// `∂_m div E`.
    pub fn d_div_e(&self) -> Vec<f64> {
        self.d_nabla_e.iter().map(DMatrix::trace).collect()
    }

    /// `E(div E)`.
    pub fn e_div_e(&self) -> f64 {
        self.d_div_e().iter().zip(&self.e.v).map(|(a, b)| a * b).sum()
    }

    pub fn grad_div_e(&self) -> Vec<f64> {
        self.geom.raise(&self.d_div_e())
    }

    /// `div(∇_E E)`, with `∇_E E = N^i_j E^j`.
    pub fn div_acceleration(&self) -> f64 {
        let n = self.n();
        let acc = self.acceleration();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.d_nabla_e[i][(i, j)] * self.e.v[j] + self.nabla_e[(i, j)] * self.e.partial(i, j);
            }
            for k in 0..n {
                s += self.geom.gamma(i, i, k) * acc[k];
            }
        }
        s
    }

    /// `‖A‖² = Σ_a ε_a g(A e_a, A e_a)` with `A(X) = ∇_X E` on `E⊥`.
    pub fn shape_norm_sq(&self) -> f64 {
        self.frame
            .e_perp
            .iter()
            .zip(&self.frame.signs)
            .map(|(v, s)| {
                let a = self.nabla_e_along(v);
                s * self.geom.dot(&a, &a)
            })
            .sum()
    }

    /// `tr A = Σ_a ε_a g(A e_a, e_a)`.
    pub fn shape_trace(&self) -> f64 {
        self.frame
            .e_perp
            .iter()
            .zip(&self.frame.signs)
            .map(|(v, s)| s * self.geom.dot(&self.nabla_e_along(v), v))
            .sum()
    }

    /// `Ric(X) = Σ_b ε_b g(R(f_b, X)X, f_b)` over the adapted frame.
    pub fn ricci(&self, x: &[f64]) -> f64 {
        self.frame
            .vectors()
            .map(|(f, s)| s * self.geom.dot(&self.geom.curvature_map(f, x, x), f))
            .sum()
    }

    /// `E(λ)`.
    pub fn e_lambda(&self) -> f64 {
        self.lambda.along(&self.e.v)
    }

    /// `X(E(λ))` for a vector field `X` given by its value at the point.
    pub fn along_e_lambda(&self, x: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for k in 0..n {
            for m in 0..n {
                s += x[k] * (self.e.partial(k, m) * self.lambda.d[m] + self.e.v[m] * self.lambda.hess(k, m));
            }
        }
        s
    }

    /// `L_U g`.
    pub fn lie_u(&self) -> DMatrix<f64> {
        self.geom.lie_metric(&self.nabla_u)
    }
}

/// First-order data of the unit field `E = U/λ` used by flow integration.
#[derive(Clone, Debug)]
pub struct UnitFieldJet {
    pub e: Vec<f64>,
    /// `∂_m E^i` at `m * n + i`.
    pub de: Vec<f64>,
    pub div_e: f64,
    pub lambda: f64,
    pub eps: f64,
}

pub fn unit_field_jet(m: &ManifoldSpec, field: &VectorField, p: &[f64]) -> Result<UnitFieldJet, GeometryError> {
    let geom = PointGeometry::new(m.metric(), p, Order::Connection)?;
    let n = geom.n;
    let u = field.jet(p, false)?;
    let mut q = 0.0;
    let mut dq = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let gij = geom.g[(i, j)];
            q += gij * u.v[i] * u.v[j];
            for (mm, d) in dq.iter_mut().enumerate() {
                *d += geom.dg[mm][(i, j)] * u.v[i] * u.v[j] + 2.0 * gij * u.partial(mm, i) * u.v[j];
            }
        }
    }
    if !(q.abs() > NULL_TOLERANCE * geom.scale()) {
        return Err(GeometryError::NullField {
            point: p.to_vec(),
            norm_sq: q,
        });
    }
    let eps = q.signum();
    let lambda = q.abs().sqrt();
    let dl: Vec<f64> = dq.iter().map(|d| eps * d / (2.0 * lambda)).collect();
    let e: Vec<f64> = u.v.iter().map(|x| x / lambda).collect();
    let mut de = vec![0.0; n * n];
    for mm in 0..n {
        for i in 0..n {
            de[mm * n + i] = u.partial(mm, i) / lambda - u.v[i] * dl[mm] / (lambda * lambda);
        }
    }
    let mut div_e = 0.0;
    for i in 0..n {
        div_e += de[i * n + i];
        for k in 0..n {
            div_e += geom.gamma(i, i, k) * e[k];
        }
    }
    Ok(UnitFieldJet {
        e,
        de,
        div_e,
        lambda,
        eps,
    })
}
