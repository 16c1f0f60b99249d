use warpsplit::fixtures::find;
use warpsplit::flow::{line_integral, period_group, PeriodClass};

const TOL: f64 = 1e-10;

#[test]
fn irrational_torus_periods_are_exact() {
    let p = find("irrational-torus").unwrap().spec.build().unwrap();
    let r = period_group(&p.manifold, &p.field, &p.samples, 1e-7, TOL).unwrap();
    assert_eq!(r.class, PeriodClass::Dense);
    assert_eq!(r.rank, 2);
    let mut values: Vec<f64> = r.loops.iter().map(|l| l.value.unwrap()).collect();
    values.sort_by(f64::total_cmp);
    assert!((values[0] - 1.0).abs() < 1e-12);
    assert!((values[1] - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn reversal_and_additivity() {
    for key in ["flat-torus", "irrational-torus", "minkowski-torus", "warped-s3-quotient"] {
        let p = find(key).unwrap().spec.build().unwrap();
        let (m, u) = (&p.manifold, &p.field);
        for a in &m.loops {
            let va = line_integral(m, u, a, TOL).unwrap().0;
            let back = line_integral(m, u, &a.reversed(), TOL).unwrap().0;
            assert!((va + back).abs() < 1e-10, "{key}/{}: {va} vs {back}", a.name);
            for b in &m.loops {
                let vb = line_integral(m, u, b, TOL).unwrap().0;
                let joined = line_integral(m, u, &a.concat(b), TOL).unwrap().0;
                assert!((joined - va - vb).abs() < 1e-10, "{key}: {}·{}", a.name, b.name);
            }
        }
    }
}

#[test]
fn period_group_needs_a_closed_form() {
    let p = find("nongeodesic-plane").unwrap().spec.build().unwrap();
    assert!(period_group(&p.manifold, &p.field, &p.samples, 1e-7, TOL).is_err());
}
