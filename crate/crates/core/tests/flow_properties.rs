use warpsplit::classify::classify_field;
use warpsplit::fixtures::{catalog, find};
use warpsplit::flow::{chart_distance, integrate_flow, leaf_samples, FlowOptions, FlowResult};
use warpsplit::geometry::unit_field_jet;
use warpsplit::spec::Problem;
use warpsplit::split::t_grid;

fn problems() -> Vec<Problem> {
    catalog()
        .iter()
        .map(|f| f.spec.build_with(Some(24), None).expect("fixture builds"))
        .collect()
}

fn end(r: &FlowResult, t: f64) -> Option<Vec<f64>> {
    r.state_at(t).map(|s| s.to_vec())
}

#[test]
fn flow_group_law() {
    let opts = FlowOptions::default();
    let pairs = [(0.3, 0.45), (-0.4, 0.25), (0.7, -0.2), (-0.35, -0.5), (1.1, 0.6)];
    let mut checked = 0;
    for p in problems() {
        let (m, u) = (&p.manifold, &p.field);
        for (k, s) in p.samples.iter().take(8).enumerate() {
            let (a, b) = pairs[k % pairs.len()];
            let Ok(direct) = integrate_flow(m, u, &s.coords, &[a + b], &opts) else {
                continue;
            };
            let Ok(first) = integrate_flow(m, u, &s.coords, &[b], &opts) else {
                continue;
            };
            let (Some(x), Some(mid)) = (end(&direct, a + b), end(&first, b)) else {
                continue;
            };
            let Some(y) = integrate_flow(m, u, &mid, &[a], &opts).ok().and_then(|r| end(&r, a)) else {
                continue;
            };
            let d = chart_distance(m, &x, &y);
            assert!(d < 1e-8, "{}: Φ_(s+t) vs Φ_s Φ_t differ by {d:e} from {:?}", p.name, s.coords);
            checked += 1;
        }
    }
    assert!(checked >= 60, "only {checked} group-law checks ran");
}

#[test]
fn differential_transports_e() {
    let times: Vec<f64> = t_grid((-0.8, 0.8), 9);
    let mut checked = 0;
    for p in problems() {
        let (m, u) = (&p.manifold, &p.field);
        for s in p.samples.iter().take(6) {
            let r = integrate_flow(m, u, &s.coords, &times, &FlowOptions::default()).unwrap();
            let e0 = unit_field_jet(m, u, &r.initial).unwrap().e;
            for (x, j) in r.states.iter().zip(&r.jacobians) {
                let e = unit_field_jet(m, u, x).unwrap().e;
                let pushed = j * nalgebra::DVector::from_column_slice(&e0);
                let scale = e.iter().fold(1.0f64, |a, b| a.max(b.abs()));
                let gap = e.iter().zip(pushed.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(gap / scale < 1e-7, "{}: |dΦ(E) − E| = {gap:e} at {x:?}", p.name);
                checked += 1;
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn variational_jacobian_matches_perturbed_flows() {
    let t = 0.7;
    let delta = 1e-5;
    let opts = FlowOptions::default();
    let mut checked = 0;
    for p in problems() {
        let (m, u) = (&p.manifold, &p.field);
        let n = m.dim();
        for s in p.samples.iter().take(5) {
            let r = integrate_flow(m, u, &s.coords, &[t], &opts).unwrap();
            let Some(k) = r.times.iter().position(|&x| x == t) else {
                continue;
            };
            let jac = &r.jacobians[k];
            for col in 0..n {
                let flow = |sign: f64| {
                    let mut q = r.initial.clone();
                    q[col] += sign * delta;
                    integrate_flow(m, u, &q, &[t], &opts).ok().filter(|f| f.wraps.len() == r.wraps.len())
                };
                let (Some(a), Some(b)) = (flow(1.0), flow(-1.0)) else {
                    continue;
                };
                let (Some(xa), Some(xb)) = (a.state_at(t), b.state_at(t)) else {
                    continue;
                };
                for row in 0..n {
                    let fd = (xa[row] - xb[row]) / (2.0 * delta);
                    let gap = (fd - jac[(row, col)]).abs();
                    assert!(gap < 1e-5, "{}: J[{row},{col}] = {} vs {fd}", p.name, jac[(row, col)]);
                }
                checked += 1;
            }
        }
    }
    assert!(checked >= 100, "only {checked} columns compared");
}

/// `max_t max_q |h(Φ_t q) − h(Φ_t p)|` over leaf samples `q` of the leaf
/// through the base point, computed in the unwrapped chart.
fn leaf_transport_spread(key: &str) -> Option<f64> {
    let fixture = find(key).unwrap();
    let p = fixture.spec.unwrapped().build().unwrap();
    let (m, u) = (&p.manifold, &p.field);
    let h = m.leaf_function()?;
    let leaves = leaf_samples(m, &p.sampling.base_point, 12, 3).unwrap();
    let times = t_grid(p.sampling.t_span, 11);
    let opts = FlowOptions {
        jacobian: false,
        ..FlowOptions::default()
    };
    let flows: Vec<FlowResult> = leaves.iter().map(|q| integrate_flow(m, u, q, &times, &opts).unwrap()).collect();
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
    Some(spread)
}

#[test]
fn geodesic_flows_carry_leaves_to_leaves() {
    let mut geodesic = 0;
    for f in catalog() {
        let p = f.spec.build().unwrap();
        let c = classify_field(&p.manifold, &p.field, &p.samples, p.tolerances.classify).unwrap();
        let Some(spread) = leaf_transport_spread(f.id) else { continue };
        if c.geodesic_unit.holds {
            assert!(spread < 1e-7, "{}: leaf spread {spread:e}", f.name());
            geodesic += 1;
        } else {
            assert!(spread > 1e-3, "{}: non-geodesic flow kept leaves together ({spread:e})", f.name());
        }
    }
    assert!(geodesic >= 9);
}

#[test]
fn non_geodesic_witness_breaks_leaf_transport() {
    let spread = leaf_transport_spread("nongeodesic-plane").unwrap();
    assert!(spread > 1e-2, "spread {spread:e}");
}

#[test]
fn unwrapped_chart_agrees_before_any_wrap() {
    for f in catalog().into_iter().filter(|f| !f.spec.identifications.is_empty()) {
        let wrapped = f.spec.build().unwrap();
        let open = f.spec.unwrapped().build().unwrap();
        assert!(open.manifold.identifications.is_empty());
        let base = &wrapped.sampling.base_point;
        let a = integrate_flow(&wrapped.manifold, &wrapped.field, base, &[0.2], &FlowOptions::default()).unwrap();
        let b = integrate_flow(&open.manifold, &open.field, base, &[0.2], &FlowOptions::default()).unwrap();
        if a.wraps.is_empty() {
            assert_eq!(a.state_at(0.2), b.state_at(0.2), "{}", f.name());
        }
    }
}
