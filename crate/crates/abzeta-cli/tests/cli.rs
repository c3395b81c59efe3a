use std::process::{Command, Output};

fn abzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abzeta")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

#[test]
fn list_has_every_family() {
    let o = abzeta(&["list"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.lines().count() >= 15);
    assert!(text.contains("Q=p6 H: k=6q+2, ε=5"));
}

#[test]
fn list_json_rows_have_the_documented_fields() {
    let o = abzeta(&["list", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let rows = json(&o);
    let rows = rows.as_array().unwrap();
    assert!(rows.len() >= 15);
    for r in rows {
        for key in ["name", "display", "k_shape", "holonomy", "holonomy_order", "abscissa", "functional_equation"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
}

#[test]
fn unknown_filter_gives_empty_table() {
    let o = abzeta(&["list", "--family", "nosuchgroup", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o), serde_json::json!([]));
}

#[test]
fn verify_g2_small() {
    let o = abzeta(&["verify", "--family", "G2", "--primes", "2,3,5", "--m", "3", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let cells = json(&o);
    assert_eq!(cells.as_array().unwrap().len(), 3);
    assert!(cells.as_array().unwrap().iter().all(|c| c["status"] == "equal"));
}

#[test]
fn verify_all_families_at_two() {
    let o = abzeta(&["verify", "--primes", "2", "--m", "5", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let cells = json(&o);
    assert!(cells.as_array().unwrap().len() >= 50);
    assert!(cells.as_array().unwrap().iter().all(|c| c["status"] == "equal"));
}

#[test]
fn verify_detects_a_wrong_closed_form() {
    // The printed p=2 factor of B2 has a sign slip.
    let o = abzeta(&["verify", "--family", "B2", "--primes", "2", "--m", "3", "--printed", "--format", "json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)[0]["first_difference"], 1);
}

#[test]
fn verify_skips_over_budget_cells() {
    let o = abzeta(&["verify", "--family", "G2", "--primes", "5", "--m", "4", "--mode", "full", "--work-limit", "100", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)[0]["status"], "skipped");
}

#[test]
fn funceq_confirmed_and_printed() {
    assert_eq!(code(&abzeta(&["funceq"])), 0);
    let o = abzeta(&["funceq", "--family", "p3E", "--printed", "--format", "json"]);
    assert_eq!(code(&o), 1);
    let rows = json(&o);
    let failing: Vec<u64> = rows.as_array().unwrap().iter().filter(|r| r["holds"] == false).map(|r| r["p"].as_u64().unwrap()).collect();
    assert!(failing.contains(&5) && !failing.contains(&13));
}

#[test]
fn coeffs_global_and_local() {
    let o = abzeta(&["coeffs", "N:0", "--n", "10", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let a = json(&o)["a"].clone();
    assert_eq!(a[1], "7");
    assert_eq!(a[2], "13");

    let o = abzeta(&["coeffs", "G6", "--p", "2", "--m", "7", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["counts"], serde_json::json!(["1", "0", "0", "0", "0", "0", "0", "0"]));
    assert_eq!(v["mode"], "closed-form");

    let o = abzeta(&["coeffs", "G6", "--p", "2", "--m", "4", "--source", "fast", "--format", "json"]);
    assert_eq!(json(&o)["mode"], "oracle-fast");
}

#[test]
fn coeffs_csv_and_partial_sums() {
    let o = abzeta(&["coeffs", "N:0", "--n", "4", "--format", "csv"]);
    assert_eq!(stdout(&o), "n,a_n\n1,1\n2,7\n3,13\n4,35\n");
    let o = abzeta(&["coeffs", "N:0", "--n", "3", "--partial-sums"]);
    assert_eq!(stdout(&o).split_whitespace().collect::<Vec<_>>(), ["1", "1", "2", "8", "3", "21"]);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&abzeta(&["coeffs", "p2", "--n", "5"])), 2);
    assert_eq!(code(&abzeta(&["coeffs", "p3G:3", "--n", "5"])), 2);
    assert_eq!(code(&abzeta(&["coeffs", "nosuch", "--n", "5"])), 2);
    assert_eq!(code(&abzeta(&["frobnicate"])), 2);
    assert_eq!(code(&abzeta(&["verify", "--primes", "4"])), 2);
}

#[test]
fn budget_exits_three() {
    let o = abzeta(&["coeffs", "G2", "--p", "5", "--m", "4", "--source", "full", "--work-limit", "100"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn full_zeta_needs_prime_holonomy() {
    let o = abzeta(&["coeffs", "G2", "--n", "2", "--full", "--format", "json"]);
    assert_eq!(json(&o)["a"], serde_json::json!(["1", "7"]));
    let o = abzeta(&["coeffs", "G6", "--n", "2", "--full"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("full_zeta_with"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# test config\nformat = json\nprimes = 3\nbudgets = 3:2\n").unwrap();
    let c = cfg.to_str().unwrap();
    let o = abzeta(&["--config", c, "verify", "--family", "G3"]);
    assert_eq!(code(&o), 0);
    let cells = json(&o);
    assert_eq!(cells[0]["p"], 3);
    assert_eq!(cells[0]["m"], 2);
    // A flag beats the file.
    let o = abzeta(&["--config", c, "--format", "csv", "verify", "--family", "G3"]);
    assert!(stdout(&o).starts_with("family,params,p,m,"));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&abzeta(&["--config", c, "list"])), 2);
}

#[test]
fn output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let o = abzeta(&["--output", path.to_str().unwrap(), "--format", "json", "coeffs", "N:0", "--n", "2"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["a"], serde_json::json!(["1", "7"]));
}

#[test]
fn dump_catalog_records() {
    let o = abzeta(&["dump-catalog", "--family", "B2"]);
    assert_eq!(code(&o), 0);
    let recs = json(&o);
    let b2 = &recs[0];
    assert_eq!(b2["name"], "B2");
    assert!(b2["presentation"]["gens"].is_array());
    assert!(b2["printed_local"].is_object());
    assert!(!b2["errata"].as_array().unwrap().is_empty());
    assert!(b2["local_text"][0]["factor"].as_str().unwrap().contains("Z(1,-1)"));

    let o = abzeta(&["dump-catalog", "--errata"]);
    let names: Vec<String> = json(&o).as_array().unwrap().iter().map(|r| r["family"].as_str().unwrap().to_string()).collect();
    assert!(names.contains(&"B2".to_string()) && !names.contains(&"G2".to_string()));
}

#[test]
fn audit_and_control() {
    let o = abzeta(&["audit", "--family", "G2", "--trials", "200", "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o).as_array().unwrap().iter().all(|r| r["violations"] == 0));
    let o = abzeta(&["audit", "--family", "G2", "--trials", "200", "--broken", "--format", "json"]);
    assert_eq!(code(&o), 0, "the broken control must be detected");
    assert!(json(&o).as_array().unwrap().iter().any(|r| r["violations"].as_u64().unwrap() > 0));
}

#[test]
fn witness_dump() {
    let o = abzeta(&["audit", "--family", "G2", "--primes", "2", "--witnesses", "1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "a,b,c,t12,t13,t23,v11,v12,v13");
    // 1 + 6 subgroups of index dividing 2.
    assert_eq!(lines.count(), 7);
}

#[test]
fn deterministic_output() {
    let args = ["verify", "--primes", "3", "--m", "2", "--format", "csv"];
    let strip = |s: String| s.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>();
    assert_eq!(strip(stdout(&abzeta(&args))), strip(stdout(&abzeta(&["--jobs", "1", "verify", "--primes", "3", "--m", "2", "--format", "csv"]))));
}
