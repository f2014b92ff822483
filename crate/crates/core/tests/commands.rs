use kmfix::experiment::{cmd_product, cmd_uafpp, ExperimentConfig, Overrides, Status};
use kmfix::suite::DIAGONAL_CONFIG;

fn config(path: &str) -> ExperimentConfig {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/");
    ExperimentConfig::load(std::path::Path::new(&format!("{root}{path}"))).unwrap()
}

#[test]
fn diagonal_certificate_has_zero_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cert.json");
    let cfg = ExperimentConfig::from_json(DIAGONAL_CONFIG).unwrap().with_overrides(&Overrides {
        out: Some(out.clone()),
        ..Default::default()
    });
    assert_eq!(cmd_product(&cfg).status, Status::Ok);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(v["result"]["residual"], "0.0000000000000000e0");
    assert_eq!(v["config_sha256"], cfg.hash());
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn escaping_map_writes_a_partial_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.json");
    let cfg = config("escaping_product.json").with_overrides(&Overrides { out: Some(out.clone()), ..Default::default() });
    assert_eq!(cmd_product(&cfg).status, Status::BudgetExhausted);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap();
    assert_eq!(v["result"]["status"], "budget_exhausted");
    assert_eq!(v["result"]["best_residual"], "1.0000000000000000e0");
}

#[test]
fn bounded_family_is_certified() {
    let r = cmd_product(&config("family_product.json"));
    assert_eq!(r.status, Status::Ok, "{}", r.message);
    assert!(r.message.contains("bounded-selection-orbits"));
}

#[test]
fn family_invariance_violation_is_a_property_failure() {
    let mut cfg = config("family_product.json");
    let p = cfg.product.as_mut().unwrap();
    p.map = serde_json::from_str(r#"{"kind": "affine", "a": 1, "b": 1, "c": 0, "d": 0, "e": 1, "f": 0}"#).unwrap();
    let r = cmd_product(&cfg);
    assert_eq!(r.status, Status::Violation);
    assert!(r.message.contains("outside C_u"), "{}", r.message);
}

#[test]
fn expanding_product_map_is_rejected() {
    let mut cfg = ExperimentConfig::from_json(DIAGONAL_CONFIG).unwrap();
    cfg.product.as_mut().unwrap().map =
        serde_json::from_str(r#"{"kind": "affine", "a": 1, "b": 1, "c": 0, "d": 0, "e": 1, "f": 0, "clamp_x": {"lo": 0, "hi": 1}}"#)
            .unwrap();
    assert_eq!(cmd_product(&cfg).status, Status::Violation);
}

#[test]
fn goebel_kirk_claim_fails_on_the_line() {
    let mut cfg = config("uafpp_banach.json");
    assert_eq!(cmd_uafpp(&cfg).status, Status::Ok);
    cfg.space = Some(kmfix::spaces::Space::Euclidean { dim: 1 });
    let r = cmd_uafpp(&cfg);
    assert_eq!(r.status, Status::Violation);
    assert!(r.message.contains("the claimed bound fails"));
}
