use super::fields::MetricField;
use super::jet::{ScalarJet, VecJet};
use super::GeometryError;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative size of the smallest metric eigenvalue below which the metric
/// counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// How much of the curvature tower to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Connection,
    Curvature,
}

/// Metric, Levi-Civita connection and (optionally) curvature at one point.
///
/// Index layout: `gamma(k, i, j)` is `Γ^k_{ij}`; `dgamma(m, k, i, j)` is
/// `∂_m Γ^k_{ij}`; `riemann(l, k, i, j)` is `R^l_{kij}` with
/// `R(∂_i, ∂_j)∂_k = R^l_{kij} ∂_l` and
/// `R(X, Y) = ∇_X ∇_Y − ∇_Y ∇_X − ∇_[X,Y]`.
#[derive(Clone, Debug)]
pub struct PointGeometry {
    pub n: usize,
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<DMatrix<f64>>,
    gamma: Vec<f64>,
    dgamma: Vec<f64>,
    riemann: Vec<f64>,
}

impl PointGeometry {
    pub fn new(metric: &MetricField, p: &[f64], order: Order) -> Result<Self, GeometryError> {
        let n = metric.dim();
        let second = order == Order::Curvature;
        let jet = metric.jet(p, second)?;
        let g = DMatrix::from_row_slice(n, n, &jet.g);
        check_nondegenerate(&g, p)?;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| GeometryError::Degenerate {
                point: p.to_vec(),
                min_eigenvalue: 0.0,
                scale: g.amax(),
            })?;
        let dg: Vec<_> = jet.d.iter().map(|d| DMatrix::from_row_slice(n, n, d)).collect();
        let ddg: Vec<_> = jet.dd.iter().map(|d| DMatrix::from_row_slice(n, n, d)).collect();

        // T_{lij} = ∂_i g_{lj} + ∂_j g_{li} − ∂_l g_{ij}
        let t = |l: usize, i: usize, j: usize| dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)];
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (0..n).map(|l| ginv[(k, l)] * t(l, i, j)).sum::<f64>();
                    gamma[(k * n + i) * n + j] = v;
                    gamma[(k * n + j) * n + i] = v;
                }
            }
        }

        let mut geom = PointGeometry {
            n,
            point: p.to_vec(),
            g,
            ginv,
            dg,
            ddg,
            gamma,
            dgamma: Vec::new(),
            riemann: Vec::new(),
        };
        if second {
            geom.fill_curvature();
        }
        Ok(geom)
    }

    fn fill_curvature(&mut self) {
        let n = self.n;
        let dg = &self.dg;
        let ddg = &self.ddg;
        // ∂_m g^{-1} = −g^{-1} (∂_m g) g^{-1}
        let dginv: Vec<DMatrix<f64>> = dg.iter().map(|d| -(&self.ginv * d * &self.ginv)).collect();
        let t = |l: usize, i: usize, j: usize| dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)];
        let dt = |m: usize, l: usize, i: usize, j: usize| {
            ddg[m * n + i][(l, j)] + ddg[m * n + j][(l, i)] - ddg[m * n + l][(i, j)]
        };
        let mut dgamma = vec![0.0; n * n * n * n];
        for m in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let v = 0.5
                            * (0..n)
                                .map(|l| dginv[m][(k, l)] * t(l, i, j) + self.ginv[(k, l)] * dt(m, l, i, j))
                                .sum::<f64>();
                        dgamma[((m * n + k) * n + i) * n + j] = v;
                        dgamma[((m * n + k) * n + j) * n + i] = v;
                    }
                }
            }
        }
        self.dgamma = dgamma;

        let mut riemann = vec![0.0; n * n * n * n];
        for l in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let mut v = self.dgamma(i, l, j, k) - self.dgamma(j, l, i, k);
                        for m in 0..n {
                            v += self.gamma(l, i, m) * self.gamma(m, j, k)
                                - self.gamma(l, j, m) * self.gamma(m, i, k);
                        }
                        riemann[((l * n + k) * n + i) * n + j] = v;
                    }
                }
            }
        }
        self.riemann = riemann;
    }

    pub fn has_curvature(&self) -> bool {
        !self.riemann.is_empty()
    }

    /// `Γ^k_{ij}`.
    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    /// `∂_m Γ^k_{ij}`.
    pub fn dgamma(&self, m: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.dgamma[((m * n + k) * n + i) * n + j]
    }

    /// `R^l_{kij}`.
    pub fn riemann(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.riemann[((l * n + k) * n + i) * n + j]
    }

    /// Largest `|g_ij|` at the point.
    pub fn scale(&self) -> f64 {
        self.g.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += self.g[(i, j)] * u[i] * v[j];
            }
        }
        s
    }

    pub fn lower(&self, v: &[f64]) -> Vec<f64> {
        (&self.g * DVector::from_column_slice(v)).as_slice().to_vec()
    }

    pub fn raise(&self, w: &[f64]) -> Vec<f64> {
        (&self.ginv * DVector::from_column_slice(w)).as_slice().to_vec()
    }

    /// `R(x, y) z`.
    pub fn curvature_map(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in 0..n {
                if z[k] == 0.0 {
                    continue;
                }
                for i in 0..n {
                    for j in 0..n {
                        s += self.riemann(l, k, i, j) * z[k] * x[i] * y[j];
                    }
                }
            }
            *o = s;
        }
        out
    }

    /// `Ric_{jk} = R^i_{kij}`.
    pub fn ricci_tensor(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| self.riemann(i, k, i, j)).sum())
    }

    /// Metric entries as scalar jets of the requested order.
    pub fn metric_entry_jet(&self, i: usize, j: usize) -> ScalarJet {
        let n = self.n;
        ScalarJet {
            v: self.g[(i, j)],
            d: (0..n).map(|k| self.dg[k][(i, j)]).collect(),
            dd: if self.ddg.is_empty() {
                Vec::new()
            } else {
                (0..n * n).map(|kl| self.ddg[kl][(i, j)]).collect()
            },
        }
    }

    /// Covariant derivative matrix `N^i_j = ∂_j V^i + Γ^i_{jk} V^k`;
    /// column `j` is `∇_{∂_j} V`.
    pub fn covariant(&self, v: &VecJet) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            v.partial(j, i) + (0..n).map(|k| self.gamma(i, j, k) * v.v[k]).sum::<f64>()
        })
    }

    /// `∂_m N^i_j` for each `m`; needs a second-order jet and curvature.
    pub fn covariant_partials(&self, v: &VecJet) -> Vec<DMatrix<f64>> {
        let n = self.n;
        (0..n)
            .map(|m| {
                DMatrix::from_fn(n, n, |i, j| {
                    let mut s = v.partial2(m, j, i);
                    for k in 0..n {
                        s += self.dgamma(m, i, j, k) * v.v[k] + self.gamma(i, j, k) * v.partial(m, k);
                    }
                    s
                })
            })
            .collect()
    }

    /// `(L_V g)_{ij} = g(∇_i V, ∂_j) + g(∂_i, ∇_j V)` from `N = ∇V`.
    pub fn lie_metric(&self, nabla: &DMatrix<f64>) -> DMatrix<f64> {
        let gn = &self.g * nabla;
        &gn + gn.transpose()
    }
}

fn check_nondegenerate(g: &DMatrix<f64>, p: &[f64]) -> Result<(), GeometryError> {
    let scale = g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let eig = SymmetricEigen::new(g.clone());
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    if !(min > DEGENERACY_THRESHOLD * scale) {
        return Err(GeometryError::Degenerate {
            point: p.to_vec(),
            min_eigenvalue: min,
            scale,
        });
    }
    Ok(())
}

/// Number of negative eigenvalues of a symmetric matrix.
pub fn index_of(g: &DMatrix<f64>) -> usize {
    SymmetricEigen::new(g.clone())
        .eigenvalues
        .iter()
        .filter(|v| **v < 0.0)
        .count()
}
