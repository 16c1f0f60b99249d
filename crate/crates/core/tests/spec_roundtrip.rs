use warpsplit::fixtures::catalog;
use warpsplit::spec::SpecFile;

#[test]
fn fixtures_round_trip_through_toml() {
    for f in catalog() {
        let text = f.spec.to_toml();
        let back = SpecFile::from_toml(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", f.name()));
        assert_eq!(back, f.spec, "{}", f.name());
        assert_eq!(back.to_toml(), text);

        let a = f.spec.build().unwrap();
        let b = back.build().unwrap();
        assert_eq!(a.manifold.metric_rows(), b.manifold.metric_rows());
        assert_eq!(a.field.exprs(), b.field.exprs());
        let names = &a.manifold.coords;
        for row in a.manifold.metric_rows() {
            for e in row {
                let s = e.simplify();
                let reparsed = warpsplit::expr::parse(&s.to_text(names), names).unwrap();
                assert_eq!(reparsed, s, "{}", f.name());
            }
        }
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = format!("{}\nextra = 1\n", catalog()[0].spec.to_toml());
    assert!(SpecFile::from_toml(&text).is_err());
}

#[test]
fn oversized_dimension_is_rejected() {
    let n = 17;
    let coords: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let metric: Vec<Vec<String>> = (0..n)
        .map(|i| (0..=i).map(|j| if i == j { "1".into() } else { "0".into() }).collect())
        .collect();
    let mut field = vec!["0".to_string(); n];
    field[0] = "1".into();
    let text = format!(
        "name = \"big\"\ndimension = {n}\ncoordinates = {coords:?}\nmetric = {metric:?}\nfield = {field:?}\n\n[domain]\nintervals = {:?}\n",
        vec![[-1, 1]; n]
    );
    let spec = SpecFile::from_toml(&text).unwrap();
    let err = spec.build().unwrap_err().to_string();
    assert!(err.contains("16"), "{err}");
}
