//! Tiny SCARN (N=3, d=4, K=2, H=2) checked against a forward pass computed
//! scalar by scalar outside this crate (scripts/tiny_scarn_fixture.py).

use scarn_core::harness::fixture_max_deviation;

const TOLERANCE: f64 = 1e-10;

#[test]
fn forward_matches_hand_unrolled_fixture() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny_scarn.json")).unwrap();
    let worst = fixture_max_deviation(&text).unwrap();
    assert!(worst < TOLERANCE, "max deviation {worst:e}");
}

#[test]
fn perturbed_parameter_is_detected() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tiny_scarn.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let b = &mut v[0]["params"]["head.bias"][0];
    *b = (b.as_f64().unwrap() + 0.01).into();
    let worst = fixture_max_deviation(&v.to_string()).unwrap();
    assert!(worst > 1e-4, "{worst}");
}
