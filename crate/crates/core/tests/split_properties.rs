use warpsplit::classify::DecompositionType;
use warpsplit::fixtures::{catalog, find};
use warpsplit::flow::leaf_samples;
use warpsplit::split::{reconstruct_and_verify, split_problem, split_report, SplitConfig};

#[test]
fn warping_tables_are_normalized() {
    for f in catalog() {
        let p = f.spec.build().unwrap();
        let r = split_problem(&p).unwrap();
        let Some(rc) = &r.reconstruction else { continue };
        let k0 = rc.table.t.iter().position(|&t| t == 0.0).expect("grid contains 0");
        for row in &rc.table.f {
            assert_eq!(row[k0], Some(1.0), "{}", f.name());
        }
        assert_eq!(rc.table.normalization_defect(), 0.0);
    }
}

#[test]
fn warped_constructions_agree() {
    for f in catalog().into_iter().filter(|f| f.decomposition == DecompositionType::Warped) {
        let p = f.spec.build().unwrap();
        let r = split_problem(&p).unwrap();
        let w = r.warping.as_ref().expect("warped fixtures produce a table");
        assert!(w.lambda_ratio_gap() < 1e-7, "{}: gap {:e}", f.name(), w.lambda_ratio_gap());
    }
}

#[test]
fn twisted_model_on_warped_fixture_is_leaf_independent() {
    for key in ["warped-exp-circle", "closed-friedmann", "warped-s3-half"] {
        let p = find(key).unwrap().spec.build().unwrap();
        let cfg = SplitConfig::from_problem(&p);
        let (m, u) = (&p.manifold, &p.field);
        let leaves = leaf_samples(m, &cfg.base_point, cfg.leaf_points, cfg.seed).unwrap();
        let rc = reconstruct_and_verify(m, u, &leaves, &cfg.t_grid, DecompositionType::Twisted, &cfg.flow).unwrap();
        assert!(rc.table.leaf_spread() < 1e-7, "{key}: spread {:e}", rc.table.leaf_spread());
        assert!(rc.max_residual < cfg.reconstruction_tol, "{key}: residual {:e}", rc.max_residual);
    }
}

#[test]
fn warped_verdict_is_independent_of_base_point() {
    for key in ["warped-exp-circle", "closed-friedmann", "warped-s3-half"] {
        let p = find(key).unwrap().spec.build().unwrap();
        let cfg = SplitConfig::from_problem(&p);
        let (m, u) = (&p.manifold, &p.field);
        let reference = split_report(m, u, &p.samples, &cfg).unwrap();
        let f0 = &reference.warping.as_ref().unwrap().f[0];
        let others = leaf_samples(m, &cfg.base_point, 4, 5).unwrap();
        for q in &others[1..] {
            let moved = SplitConfig {
                base_point: q.clone(),
                ..cfg.clone()
            };
            let r = split_report(m, u, &p.samples, &moved).unwrap();
            assert_eq!(r.verdict.class, reference.verdict.class, "{key} from {q:?}");
            let f = &r.warping.as_ref().unwrap().f[0];
            for (a, b) in f.iter().zip(f0) {
                if let (Some(a), Some(b)) = (a, b) {
                    assert!((a - b).abs() < 1e-6, "{key} from {q:?}: {a} vs {b}");
                }
            }
        }
    }
}
