mod common;

#[test]
fn fixture_models_round_trip() {
    let failures = common::fixture_roundtrip();
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn random_models_round_trip() {
    let failures = common::fuzz_roundtrip(1000, 7);
    assert!(failures.is_empty(), "{} failures:\n{}", failures.len(), failures.iter().take(10).cloned().collect::<Vec<_>>().join("\n"));
}
