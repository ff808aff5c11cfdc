//! End-to-end CLI behavior: exit-status contract, byte-stable output, and
//! the bench artifacts (report JSON/table, JSONL trials, recomputation).

use std::path::PathBuf;
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn netverify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netverify"))
        .args(args)
        .current_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."))
        .output()
        .expect("binary runs")
}

fn stub_command(mode: &str) -> String {
    format!(
        "{} --mode {} --tasks {}",
        env!("CARGO_BIN_EXE_netverify-stub"),
        mode,
        data_dir().join("tasks").display()
    )
}

#[test]
fn check_golden_passes_with_status_0() {
    let output = netverify(&[
        "check",
        "data/tasks/7/golden.circuit.json",
        "--kg",
        "data/kg/kg_components.json",
        "--template",
        "data/tasks/7/template.json",
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&output.stdout), "PASS\n");
}

#[test]
fn check_output_is_byte_stable() {
    let run = || {
        netverify(&[
            "check",
            "data/tasks/7/mutations/remove_decoupling_cap.circuit.json",
            "--kg",
            "data/kg/kg_components.json",
            "--template",
            "data/tasks/7/template.json",
            "--feedback",
            "full",
        ])
    };
    let first = run();
    let second = run();
    assert_eq!(first.status.code(), Some(1));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn check_missing_file_is_status_2() {
    let output = netverify(&[
        "check",
        "data/tasks/7/no-such-file.json",
        "--kg",
        "data/kg/kg_components.json",
        "--template",
        "data/tasks/7/template.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn check_malformed_netlist_is_status_2_with_locus() {
    let dir = std::env::temp_dir().join("netverify-cli-test-malformed");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.circuit.json");
    std::fs::write(&path, b"{\"components\": [,]}").unwrap();
    let output = netverify(&[
        "check",
        path.to_str().unwrap(),
        "--kg",
        "data/kg/kg_components.json",
        "--template",
        "data/tasks/7/template.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line"), "{stderr}");
}

#[test]
fn check_writes_report_json() {
    let dir = std::env::temp_dir().join("netverify-cli-test-report");
    std::fs::create_dir_all(&dir).unwrap();
    let report = dir.join("report.json");
    let output = netverify(&[
        "check",
        "data/tasks/7/mutations/short_supply.circuit.json",
        "--kg",
        "data/kg/kg_components.json",
        "--template",
        "data/tasks/7/template.json",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["ok"], serde_json::json!(false));
    assert_eq!(
        doc["violations"][0]["message"],
        serde_json::json!("U1: supply pair shorted (+VIN and -VIN on VIN)")
    );
    assert_eq!(doc["feedback"]["level"], serde_json::json!("full"));
}

#[test]
fn bench_golden_stub_is_all_100() {
    let out = std::env::temp_dir().join("netverify-cli-test-bench-golden");
    let output = netverify(&[
        "bench",
        "--tasks",
        "data/tasks",
        "--generator",
        &stub_command("golden"),
        "--only",
        "1,3,5,6,7,8,13,14,17",
        "--n",
        "3",
        "--k",
        "1,3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let table = String::from_utf8_lossy(&output.stdout);
    for line in table.lines().skip(1) {
        if line.starts_with('#') || line.starts_with("Overall") {
            continue;
        }
        assert!(line.contains("100.0"), "row not perfect: {line}");
    }
    assert!(table.contains("# Solved"));
    assert!(table.contains("Overall Pass@1 (%)"));
    assert!(table.contains("100.0"));
    for file in ["report.json", "report.txt", "trials.jsonl"] {
        assert!(out.join(file).is_file(), "{file} missing");
    }
}

#[test]
fn bench_flaky_stub_matches_closed_form() {
    let out = std::env::temp_dir().join("netverify-cli-test-bench-flaky");
    let output = netverify(&[
        "bench",
        "--tasks",
        "data/tasks",
        "--generator",
        &stub_command("flaky"),
        "--only",
        "7",
        "--n",
        "15",
        "--k",
        "1,5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    // the flaky stub succeeds on 8 of 15 seeds: Pass@1 = 53.3
    assert_eq!(report["tasks"][0]["c"], serde_json::json!(8));
    assert_eq!(
        report["tasks"][0]["pass_at_k"]["1"],
        serde_json::json!(53.3)
    );
    assert_eq!(
        report["tasks"][0]["pass_at_k"]["5"],
        serde_json::json!(99.3)
    );

    // the report is recomputable from the stored JSONL trials
    let jsonl = std::fs::read_to_string(out.join("trials.jsonl")).unwrap();
    let trials: Vec<netverify::harness::TrialResult> = jsonl
        .lines()
        .map(|line| {
            let value: serde_json::Value = serde_json::from_str(line).unwrap();
            netverify::harness::TrialResult::from_json_value(&value).unwrap()
        })
        .collect();
    assert_eq!(trials.len(), 15);
    assert_eq!(trials.iter().filter(|t| t.success).count(), 8);
    let bundle = netverify::bundle::load_bundle(&data_dir().join("tasks"), 7).unwrap();
    let tasks = vec![netverify::harness::BenchTask {
        spec: bundle.spec,
        kg: bundle.kg,
        template: bundle.template,
    }];
    let options = netverify::harness::BenchOptions {
        trials: 15,
        ks: vec![1, 5],
        ..Default::default()
    };
    let recomputed = netverify::harness::assemble_report(&tasks, &trials, &options).unwrap();
    assert_eq!(
        serde_json::to_value(&recomputed).unwrap()["tasks"],
        report["tasks"]
    );
}

#[test]
fn bench_failing_stub_attributes_phase1() {
    let out = std::env::temp_dir().join("netverify-cli-test-bench-fail");
    let output = netverify(&[
        "bench",
        "--tasks",
        "data/tasks",
        "--generator",
        &stub_command("fail"),
        "--only",
        "5,7",
        "--n",
        "2",
        "--k",
        "1",
        "--retries",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["overall_pass_at_1"], serde_json::json!(0.0));
    assert_eq!(report["solved"], serde_json::json!(0));
    let histograms = report["phase_histograms"].as_object().unwrap();
    for (_, histogram) in histograms {
        let keys: Vec<&String> = histogram.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["phase1_syntax_erc"]);
    }
}

#[test]
fn bench_nonexistent_generator_is_status_3() {
    let out = std::env::temp_dir().join("netverify-cli-test-bench-missing");
    let output = netverify(&[
        "bench",
        "--tasks",
        "data/tasks",
        "--generator",
        "/nonexistent/generator-binary",
        "--only",
        "7",
        "--n",
        "1",
        "--k",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn kg_lint_shipped_kg_is_clean() {
    let output = netverify(&["kg-lint", "--kg", "data/kg/kg_components.json"]);
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("mean token footprint:"));
}

#[test]
fn kg_lint_statuses() {
    let dir = std::env::temp_dir().join("netverify-cli-test-kglint");
    std::fs::create_dir_all(&dir).unwrap();
    // unknown role: parse error, status 2
    let bad_role = dir.join("bad_role.json");
    std::fs::write(
        &bad_role,
        br#"{"parts":{"X1":{"pins":[{"number":1,"name":"A","role":"power_in_misc"}]}}}"#,
    )
    .unwrap();
    let output = netverify(&["kg-lint", "--kg", bad_role.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    // isolated part without isolation groups: diagnostic, status 1
    let missing_groups = dir.join("missing_groups.json");
    std::fs::write(
        &missing_groups,
        br#"{"parts":{"ISO1":{
            "pins":[{"number":1,"name":"+VIN","role":"primary_vdd"},
                    {"number":2,"name":"-VIN","role":"primary_gnd"}],
            "constraints":[{"kind":"supply_pair","pins":["+VIN","-VIN"]}]}}}"#,
    )
    .unwrap();
    let output = netverify(&["kg-lint", "--kg", missing_groups.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&output.stdout).contains("isolated part lacks isolation groups")
    );
}
