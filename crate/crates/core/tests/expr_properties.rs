use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;
use warpsplit::expr::{parse, BinaryOp, Expr, UnaryOp};

const NAMES: [&str; 3] = ["x", "y", "z"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0usize..3).prop_map(Expr::var),
        (0usize..3).prop_map(Expr::var),
        (-4i32..=4).prop_map(|c| Expr::constant(c as f64)),
        (-3.0f64..3.0).prop_map(Expr::constant),
    ]
}

/// Random expression trees of depth at most 6.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
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
                prop_oneof![
                    Just(BinaryOp::Add),
                    Just(BinaryOp::Sub),
                    Just(BinaryOp::Mul),
                    Just(BinaryOp::Div),
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            (inner, prop_oneof![Just(2.0), Just(3.0), Just(-1.0), Just(0.5), Just(1.5)])
                .prop_map(|(a, k)| Expr::binary(BinaryOp::Pow, a, Expr::constant(k))),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5f64..1.5, 3)
}

/// Five-point central difference of `e` along coordinate `i`.
fn central(e: &Expr, p: &[f64], i: usize, h: f64) -> Option<f64> {
    let at = |s: f64| {
        let mut q = p.to_vec();
        q[i] += s * h;
        e.eval(&q).ok()
    };
    Some((at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h))
}

#[test]
fn derivative_matches_central_differences() {
    let mut runner = TestRunner::deterministic();
    let exprs = expr();
    let points = prop::collection::vec(point(), 8);
    let (mut checked, mut expressions_checked) = (0usize, 0usize);
    for _ in 0..1000 {
        let e = exprs.new_tree(&mut runner).unwrap().current();
        assert!(e.depth() <= 6);
        let ps = points.new_tree(&mut runner).unwrap().current();
        let mut any = false;
        for (i, name) in NAMES.iter().enumerate() {
            let d = e.differentiate(i);
            for p in &ps {
                let (Ok(v), Ok(sym)) = (e.eval(p), d.eval(p)) else {
                    continue;
                };
                let (Some(coarse), Some(fine)) = (central(&e, p, i, 2e-3), central(&e, p, i, 1e-3)) else {
                    continue;
                };
                // the stencil itself is unresolved near a singularity, or
                // drowned in rounding when |e| is huge
                let scale = sym.abs().max(v.abs()).max(1.0);
                let noise = 16.0 * f64::EPSILON * v.abs() / 1e-3;
                if (coarse - fine).abs() > 1e-7 * scale || noise > 1e-7 * sym.abs().max(1.0) {
                    continue;
                }
                let rel = (sym - fine).abs() / sym.abs().max(1.0);
                assert!(rel < 1e-6, "d/d{name} of {e} at {p:?}: symbolic {sym}, difference {fine}");
                checked += 1;
                any = true;
            }
        }
        expressions_checked += any as usize;
    }
    println!("{checked} derivative comparisons over {expressions_checked} expressions");
    assert!(expressions_checked >= 600, "only {expressions_checked} expressions were checkable");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 300, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn simplify_preserves_values(e in expr(), ps in prop::collection::vec(point(), 100)) {
        let s = e.simplify();
        for p in &ps {
            if let Ok(a) = e.eval(p) {
                let b = s.eval(p);
                prop_assert!(b.is_ok(), "{s} undefined at {p:?} where {e} = {a}");
                let b = b.unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0), "{e} = {a}, {s} = {b} at {p:?}");
            }
        }
    }

    #[test]
    fn simplify_is_idempotent(e in expr()) {
        let s = e.simplify();
        prop_assert_eq!(s.simplify(), s);
    }

    #[test]
    fn print_parse_round_trip(e in expr()) {
        let s = e.simplify();
        let text = s.to_text(&NAMES);
        let back = parse(&text, &NAMES).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, s, "printed as {}", text);
    }

    #[test]
    fn compiled_program_agrees_with_tree(e in expr(), p in point()) {
        let prog = e.compile();
        match (e.eval(&p), prog.eval(&p)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0)),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{e} at {p:?}: tree {a:?}, program {b:?}"),
        }
    }
}
