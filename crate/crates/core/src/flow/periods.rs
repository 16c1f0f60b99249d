use super::FlowError;
use crate::classify::{classify_field, ClassifyError};
use crate::geometry::{GeometryError, Loop, ManifoldSpec, PointSample, VectorField};
use rayon::prelude::*;
use serde::Serialize;

/// Agreement required between a ratio and its last convergent.
pub const COMMENSURABILITY_TOLERANCE: f64 = 1e-9;
const MAX_DEPTH: usize = 20;
const MAX_QUOTIENT: f64 = 1e6;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod 7-15 quadrature to absolute tolerance `tol`.
/// Returns the estimate and its error bound, or `None` if the integrand is
/// not finite or the subdivision limit is hit.
pub fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Option<(f64, f64)> {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32, budget: &mut u32) -> Option<(f64, f64)> {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        let (v, e) = gk15(f, a, b);
        if !v.is_finite() || !e.is_finite() {
            return None;
        }
        if e <= tol {
            return Some((v, e));
        }
        if depth == 0 {
            return None;
        }
        let m = 0.5 * (a + b);
        let (l, el) = rec(f, a, m, 0.5 * tol, depth - 1, budget)?;
        let (r, er) = rec(f, m, b, 0.5 * tol, depth - 1, budget)?;
        Some((l + r, el + er))
    }
    rec(f, a, b, tol, 30, &mut 20_000)
}

/// `∫_σ ω` with `ω = g(U, ·)`, summed over the loop's segments.
pub fn line_integral(m: &ManifoldSpec, u: &VectorField, l: &Loop, tol: f64) -> Option<(f64, f64)> {
    let segs = l.segments();
    let mut value = 0.0;
    let mut error = 0.0;
    for seg in segs {
        let integrand = |tau: f64| -> f64 {
            let eval = || -> Option<f64> {
                let x = seg.point(tau).ok()?;
                let dx = seg.tangent(tau).ok()?;
                let g = m.metric_matrix(&x).ok()?;
                let uv = u.value(&x).ok()?;
                let n = x.len();
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += g[(i, j)] * uv[i] * dx[j];
                    }
                }
                Some(s)
            };
            eval().unwrap_or(f64::NAN)
        };
        let (v, e) = gauss_kronrod(&integrand, 0.0, 1.0, tol / segs.len().max(1) as f64)?;
        value += v;
        error += e;
    }
    Some((value, error))
}

/// Continued-fraction test: `Some((p, q))` with `x ≈ p/q` when the
/// expansion terminates within the depth limit and the convergent matches.
pub fn is_rational(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (1.0f64, x.floor());
    let (mut k0, mut k1) = (0.0f64, 1.0f64);
    let mut r = x - x.floor();
    for _ in 0..MAX_DEPTH {
        let terminated = r == 0.0 || 1.0 / r > MAX_QUOTIENT;
        if terminated {
            let close = (x - h1 / k1).abs() <= COMMENSURABILITY_TOLERANCE * x.abs().max(1.0);
            return close.then_some((h1 as i64, k1 as i64));
        }
        let inv = 1.0 / r;
        let a = inv.floor();
        r = inv - a;
        (h0, h1) = (h1, a * h1 + h0);
        (k0, k1) = (k1, a * k1 + k0);
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodClass {
    /// All periods vanish: `U` is a gradient.
    Trivial,
    /// Periods generate a cyclic group.
    Discrete,
    /// Two rationally independent periods.
    Dense,
    Indeterminate,
}

impl std::fmt::Display for PeriodClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeriodClass::Trivial => "trivial",
            PeriodClass::Discrete => "discrete",
            PeriodClass::Dense => "dense",
            PeriodClass::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoopPeriod {
    pub name: String,
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub loops: Vec<LoopPeriod>,
    pub rank: usize,
    pub class: PeriodClass,
    /// Positive generator of the group in the discrete case.
    pub generator: Option<f64>,
    pub commensurability_tolerance: f64,
    pub quadrature_tolerance: f64,
    pub max_closedness_residual: f64,
}

impl PeriodReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.loops.iter().find(|l| l.name == name).and_then(|l| l.value)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Rank and class of the subgroup generated by `values`.
pub fn classify_periods(values: &[f64], zero_tol: f64) -> (usize, PeriodClass, Option<f64>) {
    let mut basis: Vec<f64> = Vec::new();
    // denominators of each value relative to basis[0]
    let mut denominators: Vec<i64> = Vec::new();
    let mut numerators: Vec<i64> = Vec::new();
    for &v in values.iter().filter(|v| v.abs() > zero_tol) {
        let mut dependent = false;
        for (k, b) in basis.iter().enumerate() {
            if let Some((p, q)) = is_rational(v / b) {
                dependent = true;
                if k == 0 {
                    numerators.push(p);
                    denominators.push(q);
                }
                break;
            }
        }
        if !dependent {
            if basis.is_empty() {
                numerators.push(1);
                denominators.push(1);
            }
            basis.push(v);
        }
    }
    match basis.len() {
        0 => (0, PeriodClass::Trivial, None),
        1 => {
            // group = (b / L) · gcd(p_i L / q_i) with L = lcm(q_i)
            let l = denominators.iter().fold(1i64, |l, &q| l / gcd(l, q) * q);
            let g = numerators.iter().zip(&denominators).fold(0i64, |g, (&p, &q)| gcd(g, p * (l / q)));
            (1, PeriodClass::Discrete, Some((basis[0] * g as f64 / l as f64).abs()))
        }
        r => (r, PeriodClass::Dense, None),
    }
}

/// Periods of `ω = g(U, ·)` over the declared loops and the class of the
/// group they generate. Requires `ω` closed at the samples.
pub fn period_group(
    m: &ManifoldSpec,
    u: &VectorField,
    samples: &[PointSample],
    tol: f64,
    quadrature_tol: f64,
) -> Result<PeriodReport, FlowError> {
    let c = classify_field(m, u, samples, tol).map_err(|e| match e {
        ClassifyError::NullField { point, norm_sq } => FlowError::Geometry(GeometryError::NullField { point, norm_sq }),
        ClassifyError::Geometry(g) => FlowError::Geometry(g),
        other => FlowError::Classify(other.to_string()),
    })?;
    if !c.irrotational.holds {
        return Err(FlowError::NotClosed {
            point: c.irrotational.witness.clone(),
            residual: c.irrotational.max_residual,
        });
    }
    let loops: Vec<LoopPeriod> = m
        .loops
        .par_iter()
        .map(|l| {
            let r = line_integral(m, u, l, quadrature_tol);
            LoopPeriod {
                name: l.name.clone(),
                value: r.map(|r| r.0),
                error_estimate: r.map(|r| r.1),
            }
        })
        .collect();
    let (rank, class, generator) = if loops.iter().any(|l| l.value.is_none()) {
        (0, PeriodClass::Indeterminate, None)
    } else {
        let values: Vec<f64> = loops.iter().filter_map(|l| l.value).collect();
        classify_periods(&values, 1e-9)
    };
    Ok(PeriodReport {
        loops,
        rank,
        class,
        generator,
        commensurability_tolerance: COMMENSURABILITY_TOLERANCE,
        quadrature_tolerance: quadrature_tol,
        max_closedness_residual: c.irrotational.max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continued_fractions() {
        assert_eq!(is_rational(1.0), Some((1, 1)));
        assert_eq!(is_rational(0.75), Some((3, 4)));
        assert_eq!(is_rational(-2.5), Some((-5, 2)));
        assert_eq!(is_rational(0.5 + 1e-11), Some((1, 2)));
        assert_eq!(is_rational(2f64.sqrt()), None);
        assert_eq!(is_rational(std::f64::consts::PI), None);
    }

    #[test]
    fn quadrature_polynomial_and_oscillatory() {
        let (v, _) = gauss_kronrod(&|x| x.powi(5), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-14);
        let (v, _) = gauss_kronrod(&|x| (20.0 * x).sin(), 0.0, 3.0, 1e-12).unwrap();
        assert!((v - (1.0 - 60f64.cos()) / 20.0).abs() < 1e-11);
        assert!(gauss_kronrod(&|x| 1.0 / x, 0.0, 1.0, 1e-10).is_none());
    }

    #[test]
    fn period_classes() {
        assert_eq!(classify_periods(&[], 1e-9).1, PeriodClass::Trivial);
        assert_eq!(classify_periods(&[0.0, 1e-12], 1e-9).1, PeriodClass::Trivial);
        let (rank, class, g) = classify_periods(&[1.5, 2.5, -0.5 * 3.0], 1e-9);
        assert_eq!((rank, class), (1, PeriodClass::Discrete));
        assert!((g.unwrap() - 0.5).abs() < 1e-12);
        let (rank, class, _) = classify_periods(&[1.0, 2f64.sqrt()], 1e-9);
        assert_eq!((rank, class), (2, PeriodClass::Dense));
    }
}
