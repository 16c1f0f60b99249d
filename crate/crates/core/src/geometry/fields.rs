use super::jet::{ScalarJet, VecJet};
use crate::expr::{DomainError, Expr, Program};

/// A scalar expression compiled together with its first and second
/// partial derivatives.
#[derive(Clone, Debug)]
pub struct ScalarField {
    expr: Expr,
    prog: Program,
    d: Vec<Program>,
    dd: Vec<Program>,
}

impl ScalarField {
    pub fn new(expr: Expr, n: usize) -> Self {
        let expr = expr.simplify();
        let first: Vec<Expr> = (0..n).map(|i| expr.differentiate(i)).collect();
        let mut dd = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // mixed partials commute; reuse the lower-index derivative
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                dd.push(first[a].differentiate(b).compile());
            }
        }
        ScalarField {
            prog: expr.compile(),
            d: first.iter().map(Expr::compile).collect(),
            dd,
            expr,
        }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn value(&self, p: &[f64]) -> Result<f64, DomainError> {
        self.prog.eval(p)
    }

    /// Coordinate partials `∂_i f`.
    pub fn partials(&self, p: &[f64]) -> Result<Vec<f64>, DomainError> {
        self.d.iter().map(|d| d.eval(p)).collect()
    }

    pub fn jet(&self, p: &[f64], second: bool) -> Result<ScalarJet, DomainError> {
        Ok(ScalarJet {
            v: self.prog.eval(p)?,
            d: self.partials(p)?,
            dd: if second {
                self.dd.iter().map(|d| d.eval(p)).collect::<Result<_, _>>()?
            } else {
                Vec::new()
            },
        })
    }
}

/// Vector field given by coordinate component expressions.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn new(exprs: Vec<Expr>) -> Self {
        let n = exprs.len();
        VectorField {
            comps: exprs.into_iter().map(|e| ScalarField::new(e, n)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.comps.iter().map(|c| c.expr().clone()).collect()
    }

    pub fn value(&self, p: &[f64]) -> Result<Vec<f64>, DomainError> {
        self.comps.iter().map(|c| c.value(p)).collect()
    }

    pub fn jet(&self, p: &[f64], second: bool) -> Result<VecJet, DomainError> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.jet(p, second))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(VecJet::from_components(&comps))
    }

    /// The field `c · U` for a constant `c`.
    pub fn scaled(&self, c: f64) -> VectorField {
        VectorField::new(
            self.exprs()
                .into_iter()
                .map(|e| Expr::Const(c) * e)
                .collect(),
        )
    }
}

/// Symmetric matrix of metric component expressions, stored by upper
/// triangle.
#[derive(Clone, Debug)]
pub struct MetricField {
    n: usize,
    entries: Vec<ScalarField>,
}

/// Metric values and coordinate derivatives at a point, row-major.
/// `d[k]` is `∂_k g`, `dd[k * n + l]` is `∂_k ∂_l g`.
pub struct MetricJet {
    pub g: Vec<f64>,
    pub d: Vec<Vec<f64>>,
    pub dd: Vec<Vec<f64>>,
}

impl MetricField {
    /// `rows` must be square and symmetric; only `i <= j` entries are read.
    pub fn new(rows: &[Vec<Expr>]) -> Self {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(ScalarField::new(rows[i][j].clone(), n));
            }
        }
        MetricField { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[self.slot(i, j)]
    }

    pub fn value(&self, p: &[f64]) -> Result<Vec<f64>, DomainError> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).value(p)?;
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        Ok(g)
    }

    /// Values with first derivatives, and second derivatives if `second`.
    pub fn jet(&self, p: &[f64], second: bool) -> Result<MetricJet, DomainError> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        let mut d = vec![vec![0.0; n * n]; n];
        let mut dd = if second {
            vec![vec![0.0; n * n]; n * n]
        } else {
            Vec::new()
        };
        for i in 0..n {
            for j in i..n {
                let jet = self.entry(i, j).jet(p, second)?;
                g[i * n + j] = jet.v;
                g[j * n + i] = jet.v;
                for k in 0..n {
                    d[k][i * n + j] = jet.d[k];
                    d[k][j * n + i] = jet.d[k];
                    if second {
                        for l in 0..n {
                            let v = jet.dd[k * n + l];
                            dd[k * n + l][i * n + j] = v;
                            dd[k * n + l][j * n + i] = v;
                        }
                    }
                }
            }
        }
        Ok(MetricJet { g, d, dd })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn scalar_jet_matches_hand_derivatives() {
        let f = ScalarField::new(parse("x^2 * sin(y)", &["x", "y"]).unwrap(), 2);
        let p = [1.5, 0.3];
        let j = f.jet(&p, true).unwrap();
        assert!((j.v - 2.25 * 0.3f64.sin()).abs() < 1e-15);
        assert!((j.d[0] - 3.0 * 0.3f64.sin()).abs() < 1e-15);
        assert!((j.d[1] - 2.25 * 0.3f64.cos()).abs() < 1e-15);
        assert!((j.hess(0, 1) - 3.0 * 0.3f64.cos()).abs() < 1e-15);
        assert_eq!(j.hess(0, 1), j.hess(1, 0));
        assert!((j.hess(1, 1) + 2.25 * 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn metric_slots_cover_upper_triangle() {
        let names = ["a", "b", "c"];
        let rows: Vec<Vec<Expr>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| parse(&format!("{} * a + b", 10 * i.min(j) + i.max(j)), &names).unwrap())
                    .collect()
            })
            .collect();
        let m = MetricField::new(&rows);
        let g = m.value(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(g, vec![0.0, 1.0, 2.0, 1.0, 11.0, 12.0, 2.0, 12.0, 22.0]);
    }
}
