mod common;

use common::*;
use escape_rate_cli::report::{ComputeReport, SimulateReport, VerifyReport};

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn compute_tree_gives_one_third() {
    let o = run(&["compute", path(&example("tree-r3.json"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let d = &v["drift"];
    for key in ["ell_exit_time", "ell_dgf", "ell_group"] {
        let x = d[key].as_f64().unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-10, "{key} = {x}");
    }
    for xi in d["xi"]["xi"].as_array().unwrap() {
        assert!((xi.as_f64().unwrap() - 0.5).abs() < 1e-10);
    }
    assert_eq!(v["command"], "compute");
    assert_eq!(v["report_version"], 1);
}

#[test]
fn compute_non_cayley_and_lattice() {
    let v = json(&run(&["compute", path(&example("non-cayley.json"))]));
    assert!(v["drift"]["ell_group"].is_null());
    let l = v["ell"].as_f64().unwrap();
    assert!((l - v["drift"]["ell_exit_time"].as_f64().unwrap()).abs() < 1e-9);
    assert!(l > 0.0 && l < 1.0);

    let v = json(&run(&["compute", path(&example("lattice-flip.json"))]));
    let d = &v["drift"];
    let l = d["ell_dgf"].as_f64().unwrap();
    assert!((l - d["ell_group"].as_f64().unwrap()).abs() < 1e-9);
    assert!((l - d["ell_exit_time"].as_f64().unwrap()).abs() < 1e-9);
    assert_eq!(v["model"]["factors"][0]["kind"], "Z2-SRW");
    assert!(v["model"]["factors"][0]["states"].is_null());
}

#[test]
fn config_hash_matches_file_bytes() {
    let p = example("tree-r3.json");
    let v = json(&run(&["compute", path(&p)]));
    let bytes = std::fs::read(&p).unwrap();
    assert_eq!(v["config"]["sha256"], escape_rate_cli::config::sha256_hex(&bytes));
}

#[test]
fn reports_round_trip_through_their_types() {
    for ex in EXAMPLES {
        let p = example(ex);
        let o = run(&["compute", path(&p)]);
        let text = stdout(&o);
        let r: ComputeReport = serde_json::from_str(&text).unwrap();
        assert_eq!(escape_rate_cli::report::to_json(&r), text, "{ex}");

        let o = run(&["simulate", path(&p), "--steps", "1000", "--trials", "4"]);
        let text = stdout(&o);
        let r: SimulateReport = serde_json::from_str(&text).unwrap();
        assert_eq!(escape_rate_cli::report::to_json(&r), text, "{ex}");

        let o = run(&["verify", path(&p), "--order", "4"]);
        let text = stdout(&o);
        let r: VerifyReport = serde_json::from_str(&text).unwrap();
        assert_eq!(escape_rate_cli::report::to_json(&r), text, "{ex}");
    }
}

#[test]
fn json_output_is_canonical() {
    let o = run(&["compute", path(&example("non-cayley.json"))]);
    let text = stdout(&o);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut again = serde_json::to_string_pretty(&v).unwrap();
    again.push('\n');
    assert_eq!(again, text);
}

#[test]
fn csv_and_text_formats() {
    let p = example("tree-r3.json");
    let o = run(&["compute", path(&p), "--format", "csv"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("key,value"));
    let ell = csv
        .lines()
        .find_map(|l| l.strip_prefix("drift.ell_dgf,"))
        .expect("ell row");
    assert!((ell.parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert!(csv.lines().any(|l| l.starts_with("drift.type_chain.qhat[1][2],")));

    let o = run(&["compute", path(&p), "--format", "text"]);
    let text = stdout(&o);
    assert!(text.contains("ell (dgf)"));
    assert!(text.contains("0.333333333333"));

    let o = run(&["simulate", path(&p), "--steps", "1000", "--trials", "4", "--format", "text"]);
    assert!(stdout(&o).contains("stabilized prefix depth"));

    let o = run(&["verify", path(&p), "--order", "4", "--format", "text"]);
    assert!(stdout(&o).ends_with("verify: pass\n"));
}

#[test]
fn simulate_reports_z_scores() {
    let o = run(&["simulate", path(&example("non-cayley.json")), "--steps", "2000", "--trials", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    let z = v["z_scores"].as_object().unwrap();
    let keys: Vec<&str> = z.keys().map(|s| s.as_str()).collect();
    assert_eq!(keys, ["ell", "markovian", "nu_1", "nu_2", "nu_3"]);
    assert_eq!(v["parameters"]["seed"], 7);
    assert_eq!(v["estimates"]["profile"].as_array().unwrap().len(), 20);
}

#[test]
fn verify_tree_at_order_12() {
    let o = run(&["verify", path(&example("tree-r3.json")), "--order", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert_eq!(v["identities"]["checks"].as_array().unwrap().len(), 9);
    assert_eq!(v["trend"]["result"]["layers"].as_array().unwrap().len(), 13);
}

#[test]
fn verify_non_cayley_at_order_10() {
    let o = run(&["verify", path(&example("non-cayley.json")), "--order", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["passed"], true);
    assert!(v["agreement"]["ell_group"].is_null());
    for c in v["identities"]["checks"].as_array().unwrap() {
        assert!(c["max_discrepancy"].as_f64().unwrap() < 1e-10, "{c}");
    }
}

#[test]
fn verify_lattice_skips_series_checks() {
    let o = run(&["verify", path(&example("lattice-flip.json"))]);
    assert!(o.status.success());
    let v = json(&o);
    assert!(v["identities"].is_null());
    assert!(v["trend"].is_null());
    assert_eq!(v["notices"].as_array().unwrap().len(), 1);
    assert_eq!(v["agreement"]["passed"], true);
}
