//! Acceptance gate: one PASS/FAIL line per criterion.

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use std::time::Instant;
use warpsplit::classify::{classify_field, curvature_conditions, gen_gr_check_normalized, DecompositionType};
use warpsplit::expr::{BinaryOp, Expr, UnaryOp};
use warpsplit::fixtures::{catalog, find};
use warpsplit::flow::{chart_distance, integrate_flow, leaf_samples, period_group, FlowOptions, FlowResult, PeriodClass};
use warpsplit::geometry::{sectional, VectorFieldEval};
use warpsplit::spec::{Problem, SpecFile};
use warpsplit::split::{split_problem, t_grid, VerdictClass, PERIOD_QUADRATURE_TOLERANCE};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn problem(key: &str, count: Option<usize>) -> Problem {
    find(key).unwrap().spec.build_with(count, None).unwrap()
}

fn max(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

// 1. identity suite
fn identities() -> Outcome {
    let mut bochner = 0.0f64;
    let mut cs_gap = f64::INFINITY;
    let mut div = 0.0f64;
    let mut ric = 0.0f64;
    let mut conformal = 0;
    for f in catalog() {
        let p = f.spec.build_with(Some(200), None).unwrap();
        let (m, u, tol) = (&p.manifold, &p.field, p.tolerances.classify);
        if p.samples.len() < 200 {
            return Err(format!("{} has only {} samples", f.name(), p.samples.len()));
        }
        let g = gen_gr_check_normalized(m, u, &p.samples, tol).map_err(|e| e.to_string())?;
        bochner = bochner.max(g.max_bochner_residual);
        cs_gap = cs_gap.min(g.min_cauchy_schwarz_gap);
        let c = curvature_conditions(m, u, &p.samples, tol).map_err(|e| e.to_string())?;
        if c.applicable {
            conformal += 1;
            div = div.max(c.max_div_residual);
            ric = ric.max(c.max_ricci_residual);
        }
    }
    check(
        bochner < 1e-7 && div < 1e-7 && ric < 1e-7 && cs_gap >= -1e-9 && conformal > 0,
        format!(
            "Bochner {bochner:.2e}, divU {div:.2e}, Ric(U) {ric:.2e} over {conformal} conformal fixtures, min CS gap {cs_gap:.2e}"
        ),
    )
}

// 2. sectional curvature of planes containing U
fn sectional_formula() -> Outcome {
    let p = problem("warped-exp-circle", Some(100));
    let (m, u) = (&p.manifold, &p.field);
    let (mut k_err, mut formula_err) = (0.0f64, 0.0f64);
    for s in &p.samples {
        let v = VectorFieldEval::new(m, u, &s.coords).map_err(|e| e.to_string())?;
        let lam = v.lambda.v;
        let eel = v.along_e_lambda(&v.e.v) / lam;
        for w in &v.frame.e_perp {
            let k = sectional(m, &s.coords, &v.u.v, w).map_err(|e| e.to_string())?;
            k_err = k_err.max((k - eel).abs());
        }
        formula_err = formula_err.max((eel - 1.0).abs());
    }
    check(
        p.samples.len() == 100 && k_err < 1e-7 && formula_err < 1e-7,
        format!("|K − E(E(λ))/λ| {k_err:.2e}, |E(E(λ))/λ − 1| {formula_err:.2e} at {} samples", p.samples.len()),
    )
}

// 3. warped reconstruction
fn warped_reconstruction() -> Outcome {
    let p = problem("warped-exp-circle", None);
    let r = split_problem(&p).map_err(|e| e.to_string())?;
    let w = r.warping.as_ref().ok_or("no warping table")?;
    let rc = r.reconstruction.as_ref().ok_or("no reconstruction")?;
    let mut f_err = 0.0f64;
    for row in &w.f {
        for (t, f) in w.t.iter().zip(row) {
            f_err = f_err.max(f.map_or(f64::INFINITY, |f| (f - t.exp()).abs()));
        }
    }
    let span_ok = w.t.first() == Some(&-1.0) && w.t.last() == Some(&1.0);
    let grid = (w.t.len(), w.leaves.len());
    check(
        r.verdict.class == VerdictClass::Line(DecompositionType::Warped)
            && span_ok
            && grid == (21, 16)
            && rc.nodes == 21 * 16
            && f_err < 1e-6
            && rc.max_residual < 1e-6
            && w.lambda_ratio_gap() < 1e-7,
        format!(
            "{}, max |f − e^t| {f_err:.2e}, residual {:.2e} on {}×{} grid, λ-ratio gap {:.2e}",
            r.verdict.class,
            rc.max_residual,
            grid.0,
            grid.1,
            w.lambda_ratio_gap()
        ),
    )
}

// 4. twisted reconstruction
fn twisted_reconstruction() -> Outcome {
    let p = problem("twisted-circle", None);
    let r = split_problem(&p).map_err(|e| e.to_string())?;
    let w = r.warping.as_ref().ok_or("no warping table")?;
    let s_index = p.manifold.coords.iter().position(|c| c == "s").unwrap();
    let mut f_err = 0.0f64;
    let mut nodes = 0;
    for (leaf, row) in w.leaves.iter().zip(&w.f) {
        let s = leaf[s_index];
        for (t, f) in w.t.iter().zip(row) {
            if let Some(f) = f {
                f_err = f_err.max((f - (t + 2.0 + s.cos()) / (2.0 + s.cos())).abs());
                nodes += 1;
            }
        }
    }
    let g = gen_gr_check_normalized(&p.manifold, &p.field, &p.samples, p.tolerances.classify).map_err(|e| e.to_string())?;
    let margin = max(g.samples.iter().map(|s| s.gen_gr_margin.abs()));
    check(
        r.decomposition == DecompositionType::Twisted
            && matches!(r.verdict.class, VerdictClass::Interval(DecompositionType::Twisted))
            && nodes > 0
            && f_err < 1e-5
            && margin < 1e-8,
        format!("{}, max |f − (t+2+cos s)/(2+cos s)| {f_err:.2e} over {nodes} nodes, genGR equality {margin:.2e}", r.verdict.class),
    )
}

// 5. monodromy discrimination
fn monodromy() -> Outcome {
    let torus = split_problem(&problem("flat-torus", None)).map_err(|e| e.to_string())?;
    let tm = torus.monodromy.as_ref().ok_or("no monodromy on the torus")?;
    let quotient = split_problem(&problem("warped-s3-quotient", None)).map_err(|e| e.to_string())?;
    let qm = quotient.monodromy.as_ref().ok_or("no monodromy on the quotient")?;
    let t0 = quotient.returns.as_ref().and_then(|r| r.first()).map_or(f64::NAN, |e| e.time);
    let min_disp = qm.samples.iter().map(|s| s.displacement).fold(f64::INFINITY, f64::min);
    check(
        torus.verdict.class == VerdictClass::Circle(DecompositionType::Direct)
            && tm.identity
            && tm.max_displacement < 1e-6
            && quotient.verdict.class == VerdictClass::CoveringOnly
            && (t0 - std::f64::consts::PI).abs() < 1e-6
            && min_disp > 0.5,
        format!(
            "torus {} with displacement {:.2e}; quotient {} with t0 − π = {:.2e}, min displacement {min_disp:.3}",
            torus.verdict.class,
            tm.max_displacement,
            quotient.verdict.class,
            t0 - std::f64::consts::PI
        ),
    )
}

// 6. period trichotomy
fn periods() -> Outcome {
    let group = |key: &str| {
        let p = problem(key, None);
        period_group(&p.manifold, &p.field, &p.samples, p.tolerances.classify, PERIOD_QUADRATURE_TOLERANCE)
            .map_err(|e| e.to_string())
    };
    let trivial = group("warped-exp-circle")?;
    let discrete = group("minkowski-torus")?;
    let dense = group("irrational-torus")?;
    let gen = discrete.generator.unwrap_or(f64::NAN);
    let mut values: Vec<f64> = dense.loops.iter().filter_map(|l| l.value).collect();
    values.sort_by(f64::total_cmp);
    let generators_ok = values.len() == 2 && (values[0] - 1.0).abs() < 1e-9 && (values[1] - 2f64.sqrt()).abs() < 1e-9;
    check(
        trivial.class == PeriodClass::Trivial
            && discrete.class == PeriodClass::Discrete
            && (gen - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9
            && dense.class == PeriodClass::Dense
            && generators_ok,
        format!(
            "no loops → {}; fixture 1 → {} with generator {gen:.10}; periods {values:?} → {}",
            trivial.class, discrete.class, dense.class
        ),
    )
}

// 7. classifier truth table
fn truth_table() -> Outcome {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_warpsplit"))
        .args(["fixtures", "--run-all"])
        .output()
        .map_err(|e| e.to_string())?;
    let text = String::from_utf8_lossy(&out.stdout);
    let passed = text.lines().filter(|l| l.starts_with("PASS")).count();
    let p = problem("nongeodesic-plane", None);
    let c = classify_field(&p.manifold, &p.field, &p.samples, p.tolerances.classify).map_err(|e| e.to_string())?;
    let special = [
        c.unit.holds,
        c.pregeodesic.holds,
        c.geodesic_unit.holds,
        c.irrotational.holds,
        c.conformal.holds,
        c.parallel.holds,
        c.grad_div_e_parallel_e.holds,
    ];
    check(
        out.status.code() == Some(0) && passed == catalog().len() && special.iter().all(|h| !h),
        format!(
            "`fixtures --run-all` exit {:?}, {passed}/{} match; control fixture special flags all false",
            out.status.code(),
            catalog().len()
        ),
    )
}

fn random_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(Expr::var),
        (0usize..3).prop_map(Expr::var),
        (-4i32..=4).prop_map(|c| Expr::constant(c as f64)),
        (-3.0f64..3.0).prop_map(Expr::constant),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just(UnaryOp::Neg),
                    Just(UnaryOp::Sin),
                    Just(UnaryOp::Cos),
                    Just(UnaryOp::Exp),
                    Just(UnaryOp::Log),
                    Just(UnaryOp::Sqrt),
                ],
                inner.clone()
            )
                .prop_map(|(op, a)| Expr::unary(op, a)),
            (
                prop_oneof![Just(BinaryOp::Add), Just(BinaryOp::Sub), Just(BinaryOp::Mul), Just(BinaryOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (inner, prop_oneof![Just(2.0), Just(3.0), Just(-1.0), Just(0.5), Just(1.5)])
                .prop_map(|(a, k)| Expr::binary(BinaryOp::Pow, a, Expr::constant(k))),
        ]
    })
}

fn five_point(e: &Expr, p: &[f64], i: usize, h: f64) -> Option<f64> {
    let at = |s: f64| {
        let mut q = p.to_vec();
        q[i] += s * h;
        e.eval(&q).ok()
    };
    Some((at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h))
}

fn derivative_oracle() -> (usize, usize, f64) {
    let mut runner = TestRunner::deterministic();
    let exprs = random_expr();
    let points = prop::collection::vec(prop::collection::vec(-1.5f64..1.5, 3), 4);
    let (mut cases, mut comparisons, mut worst) = (0, 0, 0.0f64);
    while cases < 1000 {
        let e = exprs.new_tree(&mut runner).unwrap().current();
        let ps = points.new_tree(&mut runner).unwrap().current();
        let mut compared = false;
        for i in 0..3 {
            let d = e.differentiate(i);
            for p in &ps {
                let (Ok(v), Ok(sym)) = (e.eval(p), d.eval(p)) else { continue };
                let (Some(coarse), Some(fine)) = (five_point(&e, p, i, 2e-3), five_point(&e, p, i, 1e-3)) else {
                    continue;
                };
                let noise = 16.0 * f64::EPSILON * v.abs() / 1e-3;
                if (coarse - fine).abs() > 1e-7 * sym.abs().max(v.abs()).max(1.0) || noise > 1e-7 * sym.abs().max(1.0) {
                    continue;
                }
                worst = worst.max((sym - fine).abs() / sym.abs().max(1.0));
                comparisons += 1;
                compared = true;
            }
        }
        cases += compared as usize;
    }
    (cases, comparisons, worst)
}

// 8. oracle equivalences
fn oracles() -> Outcome {
    let (cases, comparisons, d_err) = derivative_oracle();

    let opts = FlowOptions::default();
    let (t, delta) = (0.7, 1e-5);
    let mut j_err = 0.0f64;
    let mut columns = 0;
    for f in catalog() {
        let p = f.spec.build_with(Some(10), None).unwrap();
        let (m, u) = (&p.manifold, &p.field);
        for s in p.samples.iter().take(4) {
            let Ok(r) = integrate_flow(m, u, &s.coords, &[t], &opts) else { continue };
            let Some(k) = r.times.iter().position(|&x| x == t) else { continue };
            for col in 0..m.dim() {
                let run = |sign: f64| {
                    let mut q = r.initial.clone();
                    q[col] += sign * delta;
                    integrate_flow(m, u, &q, &[t], &opts)
                        .ok()
                        .filter(|x| x.wraps.len() == r.wraps.len())
                        .and_then(|x| x.state_at(t).map(|s| s.to_vec()))
                };
                let (Some(a), Some(b)) = (run(1.0), run(-1.0)) else { continue };
                for row in 0..m.dim() {
                    j_err = j_err.max(((a[row] - b[row]) / (2.0 * delta) - r.jacobians[k][(row, col)]).abs());
                }
                columns += 1;
            }
        }
    }

    let sphere = SpecFile::from_toml(
        r#"
name = "round-sphere"
dimension = 2
coordinates = ["theta", "phi"]
metric = [["1"], ["0", "sin(theta)^2"]]
field = ["1", "0"]

[domain]
intervals = [[0.2, 2.9], [-3.1, 3.1]]
"#,
    )
    .unwrap()
    .build()
    .unwrap();
    let k_err = max(sphere.samples.iter().map(|s| {
        sectional(&sphere.manifold, &s.coords, &[1.0, 0.0], &[0.0, 1.0]).map_or(f64::INFINITY, |k| (k - 1.0).abs())
    }));
    check(
        cases == 1000 && d_err < 1e-6 && columns > 0 && j_err < 1e-5 && k_err < 1e-8,
        format!(
            "derivatives {d_err:.2e} over {cases} expressions ({comparisons} comparisons); Jacobian {j_err:.2e} over {columns} columns; S² |K − 1| {k_err:.2e}"
        ),
    )
}

fn leaf_spread(key: &str) -> f64 {
    let p = find(key).unwrap().spec.unwrapped().build().unwrap();
    let (m, u) = (&p.manifold, &p.field);
    let Some(h) = m.leaf_function() else { return f64::NAN };
    let leaves = leaf_samples(m, &p.sampling.base_point, 12, 3).unwrap();
    let times = t_grid(p.sampling.t_span, 11);
    let opts = FlowOptions {
        jacobian: false,
        ..FlowOptions::default()
    };
    let flows: Vec<FlowResult> = leaves.iter().filter_map(|q| integrate_flow(m, u, q, &times, &opts).ok()).collect();
    let mut spread = 0.0f64;
    for &t in &times {
        let Some(base) = flows[0].state_at(t) else { continue };
        let h0 = h.value(base).unwrap();
        for f in &flows[1..] {
            if let Some(x) = f.state_at(t) {
                spread = spread.max((h.value(x).unwrap() - h0).abs() / h0.abs().max(1.0));
            }
        }
    }
    spread
}

// 9. group law and leaf-to-leaf transport
fn flow_laws() -> Outcome {
    let opts = FlowOptions {
        jacobian: false,
        ..FlowOptions::default()
    };
    let pairs = [(0.3, 0.45), (-0.4, 0.25), (0.7, -0.2), (-0.35, -0.5), (1.1, 0.6)];
    let mut group = 0.0f64;
    let mut checks = 0;
    let mut geodesic = 0.0f64;
    let mut control = f64::NAN;
    for f in catalog() {
        let p = f.spec.build_with(Some(16), None).unwrap();
        let (m, u) = (&p.manifold, &p.field);
        for (k, s) in p.samples.iter().take(8).enumerate() {
            let (a, b) = pairs[k % pairs.len()];
            let at = |x: &[f64], t: f64| {
                integrate_flow(m, u, x, &[t], &opts).ok().and_then(|r| r.state_at(t).map(|s| s.to_vec()))
            };
            let (Some(x), Some(mid)) = (at(&s.coords, a + b), at(&s.coords, b)) else { continue };
            let Some(y) = at(&mid, a) else { continue };
            group = group.max(chart_distance(m, &x, &y));
            checks += 1;
        }
        let c = classify_field(m, u, &p.samples, p.tolerances.classify).map_err(|e| e.to_string())?;
        if m.leaf_function().is_none() {
            continue;
        }
        let spread = leaf_spread(f.id);
        if c.geodesic_unit.holds {
            geodesic = geodesic.max(spread);
        } else {
            control = spread;
        }
    }
    check(
        checks >= 60 && group < 1e-8 && geodesic < 1e-7 && control > 1e-3,
        format!(
            "group law {group:.2e} over {checks} pairs; leaf spread {geodesic:.2e} for geodesic E, {control:.2e} on the non-geodesic control"
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("1 identity suite", identities),
        ("2 sectional-curvature formula", sectional_formula),
        ("3 warped reconstruction", warped_reconstruction),
        ("4 twisted reconstruction", twisted_reconstruction),
        ("5 monodromy discrimination", monodromy),
        ("6 period trichotomy", periods),
        ("7 classifier truth table", truth_table),
        ("8 oracle equivalences", oracles),
        ("9 flow group law and leaf transport", flow_laws),
    ];
    let start = Instant::now();
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let t = Instant::now();
        let outcome = run();
        let secs = t.elapsed().as_secs_f64();
        match &outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                println!("FAIL criterion {name}: {detail} [{secs:.2}s]");
                failed.push(name);
            }
        }
    }
    println!("total {:.2}s", start.elapsed().as_secs_f64());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
