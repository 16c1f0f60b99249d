use super::point::PointGeometry;
use super::GeometryError;
use serde::Serialize;

/// Squared-norm threshold below which a Gram–Schmidt candidate is skipped.
pub const SKIP_THRESHOLD: f64 = 1e-12;

/// Orthonormal frame `{E, e_1, …, e_{n-1}}` adapted to a non-null vector.
#[derive(Clone, Debug, Serialize)]
pub struct FramePair {
    pub base: Vec<f64>,
    /// Unit vector `E = U / λ`.
    pub e: Vec<f64>,
    /// Orthonormal basis of `E⊥`.
    pub e_perp: Vec<Vec<f64>>,
    /// `g(E, E)`.
    pub eps: f64,
    /// `g(e_a, e_a)` for each `e_perp` vector.
    pub signs: Vec<f64>,
    /// `|g(U, U)|^{1/2}`.
    pub lambda: f64,
}

impl FramePair {
    /// Builds the frame for `u` at the geometry's point. `E⊥` is completed by
    /// modified Gram–Schmidt over the coordinate basis in declaration order.
    pub fn new(geom: &PointGeometry, u: &[f64], null_tol: f64) -> Result<Self, GeometryError> {
        let n = geom.n;
        let q = geom.dot(u, u);
        if !(q.abs() > null_tol * geom.scale().max(f64::MIN_POSITIVE)) {
            return Err(GeometryError::NullField {
                point: geom.point.clone(),
                norm_sq: q,
            });
        }
        let lambda = q.abs().sqrt();
        let eps = q.signum();
        let e: Vec<f64> = u.iter().map(|x| x / lambda).collect();

        let mut basis: Vec<(Vec<f64>, f64)> = vec![(e.clone(), eps)];
        for k in 0..n {
            if basis.len() == n {
                break;
            }
            let mut v = vec![0.0; n];
            v[k] = 1.0;
            for (w, s) in &basis {
                let c = s * geom.dot(&v, w);
                for (vi, wi) in v.iter_mut().zip(w) {
                    *vi -= c * wi;
                }
            }
            let nn = geom.dot(&v, &v);
            if nn.abs() < SKIP_THRESHOLD {
                continue;
            }
            let r = nn.abs().sqrt();
            v.iter_mut().for_each(|x| *x /= r);
            basis.push((v, nn.signum()));
        }
        if basis.len() < n {
            return Err(GeometryError::FrameIncomplete {
                point: geom.point.clone(),
            });
        }
        let rest = basis.split_off(1);
        Ok(FramePair {
            base: geom.point.clone(),
            e,
            eps,
            signs: rest.iter().map(|(_, s)| *s).collect(),
            e_perp: rest.into_iter().map(|(v, _)| v).collect(),
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.e.len()
    }

    /// All frame vectors with their signs, `E` first.
    pub fn vectors(&self) -> impl Iterator<Item = (&[f64], f64)> {
        std::iter::once((self.e.as_slice(), self.eps))
            .chain(self.e_perp.iter().map(Vec::as_slice).zip(self.signs.iter().copied()))
    }

    /// Frame components `c_b = ε_b g(v, f_b)`, `E` first.
    pub fn components(&self, geom: &PointGeometry, v: &[f64]) -> Vec<f64> {
        self.vectors().map(|(f, s)| s * geom.dot(v, f)).collect()
    }

    /// Largest deviation of the frame Gram matrix from `diag(±1)`.
    pub fn orthonormality_defect(&self, geom: &PointGeometry) -> f64 {
        let vs: Vec<(&[f64], f64)> = self.vectors().collect();
        let mut worst = 0.0f64;
        for (a, (va, sa)) in vs.iter().enumerate() {
            for (b, (vb, _)) in vs.iter().enumerate() {
                let want = if a == b { *sa } else { 0.0 };
                worst = worst.max((geom.dot(va, vb) - want).abs());
            }
        }
        worst
    }
}
