mod common;

use std::path::Path;

use common::*;
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schema")
        .join(format!("{name}.schema.json"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    jsonschema::validator_for(&v).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value, what: &str) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{what}: {errors:#?}");
}

#[test]
fn bundled_configs_match_schema() {
    let v = schema("config");
    for ex in EXAMPLES {
        let doc: Value = serde_json::from_str(&std::fs::read_to_string(example(ex)).unwrap()).unwrap();
        assert_valid(&v, &doc, ex);
    }
    let bad = serde_json::json!({"schema_version": 1, "factors": [{"type": "builtin", "name": "Z9"}], "weights": [1]});
    assert!(!v.is_valid(&bad));
}

#[test]
fn reports_match_schemas() {
    let compute = schema("compute-report");
    let simulate = schema("simulate-report");
    let verify = schema("verify-report");
    for ex in EXAMPLES {
        let p = example(ex);
        let p = p.to_str().unwrap();
        assert_valid(&compute, &json(&run(&["compute", p])), ex);
        assert_valid(&simulate, &json(&run(&["simulate", p, "--steps", "1000", "--trials", "3"])), ex);
        assert_valid(&verify, &json(&run(&["verify", p, "--order", "5"])), ex);
    }
}
