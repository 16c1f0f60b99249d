//! Dormand–Prince 5(4) stepping for the flow of `E`, its variational
//! equation and the `divE` quadrature.

use super::{FlowOptions, FlowStats, Termination};
use crate::geometry::{unit_field_jet, AppliedMap, GeometryError, ManifoldSpec, VectorField};
use nalgebra::DMatrix;

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// The autonomous system `x' = E(x)`, `J' = DE(x) J`, `q' = divE(x)/(n−1)`.
/// State layout: `[x (n), J row-major (n²) if tracked, q]`.
#[derive(Clone, Copy)]
pub(crate) struct System<'a> {
    pub m: &'a ManifoldSpec,
    pub u: &'a VectorField,
    pub n: usize,
    pub jacobian: bool,
}

impl<'a> System<'a> {
    pub fn new(m: &'a ManifoldSpec, u: &'a VectorField, jacobian: bool) -> Self {
        System {
            m,
            u,
            n: m.dim(),
            jacobian,
        }
    }

    pub fn len(&self) -> usize {
        self.n + if self.jacobian { self.n * self.n } else { 0 } + 1
    }

    pub fn initial(&self, p: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.len()];
        y[..self.n].copy_from_slice(p);
        if self.jacobian {
            for i in 0..self.n {
                y[self.n + i * self.n + i] = 1.0;
            }
        }
        y
    }

    pub fn rhs(&self, y: &[f64], out: &mut [f64]) -> Result<(), GeometryError> {
        let n = self.n;
        let jet = unit_field_jet(self.m, self.u, &y[..n])?;
        out[..n].copy_from_slice(&jet.e);
        if self.jacobian {
            // (DE J)_{ij} = Σ_m ∂_m E^i J_{mj}
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for mm in 0..n {
                        s += jet.de[mm * n + i] * y[n + mm * n + j];
                    }
                    out[n + i * n + j] = s;
                }
            }
        }
        let last = self.len() - 1;
        out[last] = jet.div_e / (n - 1) as f64;
        Ok(())
    }

    pub fn point<'y>(&self, y: &'y [f64]) -> &'y [f64] {
        &y[..self.n]
    }

    pub fn jacobian_of(&self, y: &[f64]) -> Option<DMatrix<f64>> {
        self.jacobian
            .then(|| DMatrix::from_row_slice(self.n, self.n, &y[self.n..self.n + self.n * self.n]))
    }

    pub fn quadrature(&self, y: &[f64]) -> f64 {
        y[self.len() - 1]
    }

    /// Replaces the point by its wrapped image and composes the Jacobian
    /// with the identification differential.
    pub fn apply_wrap(&self, y: &mut [f64], point: &[f64], d: &DMatrix<f64>) {
        let n = self.n;
        y[..n].copy_from_slice(point);
        if self.jacobian {
            let j = DMatrix::from_row_slice(n, n, &y[n..n + n * n]);
            let jn = d * j;
            for i in 0..n {
                for k in 0..n {
                    y[n + i * n + k] = jn[(i, k)];
                }
            }
        }
    }

    /// One Dormand–Prince step of size `h` from `y` with `k1 = f(y)`.
    /// Returns the new state and the weighted error norm.
    pub fn rk_step(&self, y: &[f64], k1: &[f64], h: f64, tol: f64) -> Result<(Vec<f64>, f64), GeometryError> {
        let len = y.len();
        let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
        let mut tmp = vec![0.0; len];
        for s in 1..7 {
            for i in 0..len {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            let mut ks = vec![0.0; len];
            self.rhs(&tmp, &mut ks)?;
            k.push(ks);
        }
        // the last stage is evaluated at the fifth-order solution
        let ynew = tmp;
        let mut err = 0.0;
        for i in 0..len {
            let mut e = 0.0;
            for (s, ks) in k.iter().enumerate() {
                e += E[s] * ks[i];
            }
            let sc = tol + tol * y[i].abs().max(ynew[i].abs());
            err += (h * e / sc).powi(2);
        }
        Ok((ynew, (err / len as f64).sqrt()))
    }
}

/// An accepted step.
pub(crate) struct Accepted {
    pub t_prev: f64,
    pub y_prev: Vec<f64>,
    /// End state before wrapping.
    pub y_end: Vec<f64>,
    pub applied: Vec<AppliedMap>,
}

/// Adaptive integrator state in one time direction.
pub(crate) struct Stepper<'a> {
    pub sys: System<'a>,
    pub t: f64,
    pub y: Vec<f64>,
    k1: Vec<f64>,
    dir: f64,
    h: f64,
    tol: f64,
    wrap: bool,
    max_steps: usize,
    pub stats: FlowStats,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: System<'a>, p: &[f64], dir: f64, opts: &FlowOptions) -> Result<Self, GeometryError> {
        let y = sys.initial(p);
        let mut k1 = vec![0.0; y.len()];
        sys.rhs(&y, &mut k1)?;
        Ok(Stepper {
            sys,
            t: 0.0,
            y,
            k1,
            dir,
            h: 1e-3,
            tol: opts.tol,
            wrap: opts.wrap,
            max_steps: opts.max_steps,
            stats: FlowStats::default(),
        })
    }

    fn inside(&self, x: &[f64]) -> bool {
        if self.wrap {
            self.sys.m.normalize(x).is_some()
        } else {
            self.sys.m.domain.contains(x)
        }
    }

    /// A step may not cross more than a quarter of any bounded coordinate
    /// interval, so that leaf crossings and wraps are seen one at a time.
    fn too_long(&self, ynew: &[f64]) -> bool {
        self.sys.m.domain.intervals.iter().enumerate().any(|(k, iv)| {
            iv.is_bounded() && (ynew[k] - self.y[k]).abs() > 0.25 * (iv.hi - iv.lo)
        })
    }

    /// Takes one accepted step without passing `t_limit`.
    pub fn advance(&mut self, t_limit: f64) -> Result<Accepted, Termination> {
        let remaining = (t_limit - self.t) * self.dir;
        if remaining <= 0.0 {
            return Err(Termination::Completed);
        }
        let mut failure: Option<String> = None;
        loop {
            if self.stats.steps + self.stats.rejected >= self.max_steps {
                return Err(Termination::MaxSteps { time: self.t });
            }
            let h_min = 1e-12 * self.t.abs().max(1.0);
            let remaining = (t_limit - self.t) * self.dir;
            let clamped = self.h >= remaining;
            let h = if clamped { remaining } else { self.h };
            if h < h_min && !clamped {
                if let Some(message) = failure {
                    return Err(Termination::EvaluationFailed {
                        time: self.t,
                        point: self.sys.point(&self.y).to_vec(),
                        message,
                    });
                }
                return Err(Termination::StepUnderflow {
                    time: self.t,
                    point: self.sys.point(&self.y).to_vec(),
                    step: h,
                });
            }
            self.stats.evaluations += 6;
            let trial = self.sys.rk_step(&self.y, &self.k1, h * self.dir, self.tol);
            let (ynew, err) = match trial {
                Ok((ynew, err)) if err.is_finite() && ynew.iter().all(|v| v.is_finite()) => {
                    failure = None;
                    (ynew, err)
                }
                other => {
                    failure = Some(match other {
                        Err(e) => e.to_string(),
                        Ok(_) => "non-finite state".into(),
                    });
                    self.stats.rejected += 1;
                    self.h = h * 0.25;
                    continue;
                }
            };
            if err > 1.0 {
                self.stats.rejected += 1;
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                continue;
            }
            if self.too_long(&ynew) {
                self.stats.rejected += 1;
                self.h = h * 0.5;
                continue;
            }
            if !self.inside(self.sys.point(&ynew)) {
                return Err(self.escape(h));
            }
            self.stats.steps += 1;
            self.stats.max_error = self.stats.max_error.max(err);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let next = h * grow;
            if !clamped || next > self.h {
                self.h = next;
            }
            let t_prev = self.t;
            let y_prev = std::mem::replace(&mut self.y, ynew.clone());
            self.t = if clamped { t_limit } else { self.t + h * self.dir };
            let mut applied = Vec::new();
            if self.wrap {
                let w = self
                    .sys
                    .m
                    .normalize(self.sys.point(&ynew))
                    .expect("inside() checked normalization");
                if !w.applied.is_empty() {
                    self.sys.apply_wrap(&mut self.y, &w.point, &w.jacobian);
                    applied = w.applied;
                }
            }
            match self.sys.rhs(&self.y, &mut self.k1) {
                Ok(()) => self.stats.evaluations += 1,
                Err(e) => {
                    return Err(Termination::EvaluationFailed {
                        time: self.t,
                        point: self.sys.point(&self.y).to_vec(),
                        message: e.to_string(),
                    })
                }
            }
            return Ok(Accepted {
                t_prev,
                y_prev,
                y_end: ynew,
                applied,
            });
        }
    }

    /// Locates the exit time inside a step of size `h` that left the chart.
    fn escape(&mut self, h: f64) -> Termination {
        let (mut lo, mut hi) = (0.0, h);
        let mut last_inside = self.sys.point(&self.y).to_vec();
        for _ in 0..60 {
            if hi - lo <= 1e-12 * self.t.abs().max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.sys.rk_step(&self.y, &self.k1, mid * self.dir, self.tol) {
                Ok((y, _)) if self.inside(self.sys.point(&y)) => {
                    lo = mid;
                    last_inside = self.sys.point(&y).to_vec();
                }
                _ => hi = mid,
            }
        }
        Termination::Escaped {
            time: self.t + lo * self.dir,
            point: last_inside,
        }
    }
}

impl Stepper<'_> {
    /// Refines a root of `g` inside an accepted step by bisecting the
    /// sub-step size, each trial a single step from the step start.
    pub fn refine(&self, acc: &Accepted, g: &dyn Fn(&[f64]) -> f64, t_tol: f64) -> Option<(f64, Vec<f64>)> {
        let mut k1 = vec![0.0; acc.y_prev.len()];
        self.sys.rhs(&acc.y_prev, &mut k1).ok()?;
        let g0 = g(self.sys.point(&acc.y_prev));
        let (mut lo, mut hi) = (0.0, (self.t - acc.t_prev).abs());
        let mut best = acc.y_end.clone();
        while hi - lo > t_tol {
            let mid = 0.5 * (lo + hi);
            let (y, _) = self.sys.rk_step(&acc.y_prev, &k1, mid * self.dir, self.tol).ok()?;
            if g(self.sys.point(&y)).signum() == g0.signum() {
                lo = mid;
            } else {
                hi = mid;
                best = y;
            }
        }
        Some((acc.t_prev + hi * self.dir, best))
    }
}
