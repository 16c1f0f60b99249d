use warpsplit::fixtures::{catalog, run_fixture};

#[test]
fn every_fixture_matches_expectations() {
    let mut failed = Vec::new();
    for f in catalog() {
        let (check, _) = run_fixture(&f).unwrap();
        println!("{} {}: {:?} {} | {}", f.id, f.name(), check.flag_mismatches, check.verdict, check.verdict_text);
        if !check.passed() {
            failed.push(check.name.clone());
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}
