//! Pointwise derivative jets.
//!
//! Field components and metric entries are differentiated symbolically;
//! quantities built from them (norms, unit fields, quotients) carry their
//! partial derivatives through these jets by the chain rule, so no finite
//! differencing enters the geometric pipeline.

/// Value, gradient and (optionally) Hessian of a scalar at a point.
/// `dd` is row-major `n × n`, empty for first-order jets.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarJet {
    pub v: f64,
    pub d: Vec<f64>,
    pub dd: Vec<f64>,
}

impl ScalarJet {
    pub fn constant(n: usize, value: f64, second_order: bool) -> Self {
        ScalarJet {
            v: value,
            d: vec![0.0; n],
            dd: if second_order { vec![0.0; n * n] } else { Vec::new() },
        }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn has_second(&self) -> bool {
        !self.dd.is_empty()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.dd[i * self.dim() + j]
    }

    pub fn add(&self, o: &ScalarJet) -> ScalarJet {
        ScalarJet {
            v: self.v + o.v,
            d: self.d.iter().zip(&o.d).map(|(a, b)| a + b).collect(),
            dd: self.dd.iter().zip(&o.dd).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> ScalarJet {
        ScalarJet {
            v: self.v * c,
            d: self.d.iter().map(|a| a * c).collect(),
            dd: self.dd.iter().map(|a| a * c).collect(),
        }
    }

    pub fn mul(&self, o: &ScalarJet) -> ScalarJet {
        let n = self.dim();
        let d = (0..n).map(|i| self.d[i] * o.v + self.v * o.d[i]).collect();
        let dd = if self.has_second() && o.has_second() {
            let mut dd = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    dd[i * n + j] = self.dd[i * n + j] * o.v
                        + self.d[i] * o.d[j]
                        + self.d[j] * o.d[i]
                        + self.v * o.dd[i * n + j];
                }
            }
            dd
        } else {
            Vec::new()
        };
        ScalarJet { v: self.v * o.v, d, dd }
    }

    /// Composition with a univariate function given its value and first
    /// two derivatives at `self.v`.
    pub fn compose(&self, f: f64, df: f64, ddf: f64) -> ScalarJet {
        let n = self.dim();
        let d = self.d.iter().map(|a| df * a).collect();
        let dd = if self.has_second() {
            let mut dd = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    dd[i * n + j] = df * self.dd[i * n + j] + ddf * self.d[i] * self.d[j];
                }
            }
            dd
        } else {
            Vec::new()
        };
        ScalarJet { v: f, d, dd }
    }

    pub fn sqrt(&self) -> ScalarJet {
        let s = self.v.sqrt();
        self.compose(s, 0.5 / s, -0.25 / (s * s * s))
    }

    pub fn recip(&self) -> ScalarJet {
        let r = 1.0 / self.v;
        self.compose(r, -r * r, 2.0 * r * r * r)
    }

    /// Directional derivative `X(self)` at the point.
    pub fn along(&self, x: &[f64]) -> f64 {
        self.d.iter().zip(x).map(|(a, b)| a * b).sum()
    }
}

/// Components `V^i` with partials `∂_m V^i` (`d[m * n + i]`) and optionally
/// `∂_m ∂_l V^i` (`dd[(m * n + l) * n + i]`).
#[derive(Clone, Debug, PartialEq)]
pub struct VecJet {
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub dd: Vec<f64>,
}

impl VecJet {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn has_second(&self) -> bool {
        !self.dd.is_empty()
    }

    /// `∂_m V^i`.
    pub fn partial(&self, m: usize, i: usize) -> f64 {
        self.d[m * self.dim() + i]
    }

    /// `∂_m ∂_l V^i`.
    pub fn partial2(&self, m: usize, l: usize, i: usize) -> f64 {
        let n = self.dim();
        self.dd[(m * n + l) * n + i]
    }

    pub fn component(&self, i: usize) -> ScalarJet {
        let n = self.dim();
        ScalarJet {
            v: self.v[i],
            d: (0..n).map(|m| self.partial(m, i)).collect(),
            dd: if self.has_second() {
                let mut dd = vec![0.0; n * n];
                for m in 0..n {
                    for l in 0..n {
                        dd[m * n + l] = self.partial2(m, l, i);
                    }
                }
                dd
            } else {
                Vec::new()
            },
        }
    }

    pub fn from_components(comps: &[ScalarJet]) -> VecJet {
        let n = comps.len();
        let second = comps.iter().all(ScalarJet::has_second);
        let mut d = vec![0.0; n * n];
        let mut dd = if second { vec![0.0; n * n * n] } else { Vec::new() };
        for (i, c) in comps.iter().enumerate() {
            for m in 0..n {
                d[m * n + i] = c.d[m];
                if second {
                    for l in 0..n {
                        dd[(m * n + l) * n + i] = c.dd[m * n + l];
                    }
                }
            }
        }
        VecJet {
            v: comps.iter().map(|c| c.v).collect(),
            d,
            dd,
        }
    }

    /// Multiplies every component by the scalar jet `s`.
    pub fn scaled_by(&self, s: &ScalarJet) -> VecJet {
        let comps: Vec<ScalarJet> = (0..self.dim())
            .map(|i| self.component(i).mul(s))
            .collect();
        VecJet::from_components(&comps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // f(x, y) = x^2 y, at (2, 3).
    fn sample() -> ScalarJet {
        ScalarJet {
            v: 12.0,
            d: vec![12.0, 4.0],
            dd: vec![6.0, 4.0, 4.0, 0.0],
        }
    }

    #[test]
    fn product_rule() {
        let f = sample();
        let sq = f.mul(&f); // x^4 y^2
        assert_eq!(sq.v, 144.0);
        assert_eq!(sq.d, vec![4.0 * 8.0 * 9.0, 2.0 * 16.0 * 3.0]);
        assert_eq!(sq.hess(0, 0), 12.0 * 4.0 * 9.0);
        assert_eq!(sq.hess(0, 1), 4.0 * 8.0 * 2.0 * 3.0);
        assert_eq!(sq.hess(1, 1), 2.0 * 16.0);
    }

    #[test]
    fn sqrt_and_recip_invert_each_other() {
        let f = sample();
        let s = f.sqrt();
        let back = s.mul(&s);
        for (a, b) in back.d.iter().zip(&f.d) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.dd.iter().zip(&f.dd) {
            assert!((a - b).abs() < 1e-12);
        }
        let one = f.mul(&f.recip());
        assert!((one.v - 1.0).abs() < 1e-15);
        assert!(one.d.iter().chain(&one.dd).all(|x| x.abs() < 1e-12));
    }
}
