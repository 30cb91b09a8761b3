use std::path::Path;
use std::process::{Command, Output};

fn cecheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cecheck")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn graph_polylines() {
    let o = cecheck(&["graph", "--stages", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("2/1,0/1,") && rows[1].starts_with("3/1,1/1,"));

    let text = stdout(&cecheck(&["graph", "--stages", "1"]));
    let xs: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(xs, ["0/1", "5/12", "7/12", "1/1"]);
    assert_eq!(stdout(&cecheck(&["graph", "--stages", "2"])).lines().count(), 7);
}

#[test]
fn floats_have_17_digits() {
    let text = stdout(&cecheck(&["graph", "--stages", "1"]));
    let row = text.lines().nth(2).unwrap();
    let t_float = row.split(',').nth(2).unwrap();
    assert_eq!(t_float, "2.4166666666666665e0");
}

#[test]
fn levels_table() {
    let o = cecheck(&["levels", "--stages", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let counts: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["sup_count"].as_u64().unwrap()).collect();
    assert_eq!(counts, [1, 3, 5]);
}

#[test]
fn residual_rows_at_stage_one() {
    let o = cecheck(&["residual", "--stages", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("1,x,")).expect("canonical row at K=1");
    assert!(row.starts_with("1,x,1/1,1/1,0/1,exact"), "{row}");
}

#[test]
fn baseline_report_passes() {
    let o = cecheck(&["report", "--stages", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["AC1", "AC2", "AC3", "AC4", "AC5", "AC6", "AC7", "AC8", "AC9"]);
}

#[test]
fn suite_selection() {
    let o = cecheck(&["report", "--stages", "1", "--suite", "AC7"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["values"]["point"], serde_json::json!(["17/8", "1/8"]));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cecheck(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cecheck(&["graph", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(cecheck(&["report", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(cecheck(&["graph", "--tol", "0"]).status.code(), Some(2));
    assert_eq!(cecheck(&["graph", "--stages", "five"]).status.code(), Some(2));
    assert_eq!(cecheck(&["graph", "--config", "/nonexistent/run.conf"]).status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, "# stage sweep\nstages = 1\nformat = csv\n").unwrap();
    let c = conf.to_str().unwrap();
    let from_file = stdout(&cecheck(&["construct", "--config", c]));
    assert_eq!(from_file, "j,eps,a,b\n1,1/6,5/12,7/12\n");
    let overridden = stdout(&cecheck(&["construct", "--config", c, "--stages", "2"]));
    assert_eq!(overridden.lines().count(), 3);

    std::fs::write(&conf, "colour = red\n").unwrap();
    assert_eq!(cecheck(&["graph", "--config", c]).status.code(), Some(2));
}

#[test]
fn out_dir_receives_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = cecheck(&["flow", "--stages", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["flow_report.json", "characteristic_constant.csv", "characteristic_branch.csv"] {
        assert!(Path::new(&out.join(name)).is_file(), "{name}");
    }
    let branch = std::fs::read_to_string(out.join("characteristic_branch.csv")).unwrap();
    assert!(branch.contains("17/8,1/8"));
}

#[test]
fn reports_are_deterministic() {
    let a = cecheck(&["octa", "--stages", "2", "--seed", "5"]);
    let b = cecheck(&["octa", "--stages", "2", "--seed", "5"]);
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        for r in v["rows"].as_array_mut().unwrap() {
            r.as_object_mut().unwrap().remove("seconds");
            r["values"].as_object_mut().unwrap().remove("seconds");
            r.as_object_mut().unwrap().remove("detail");
        }
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(stdout(&cecheck(&["construct", "--stages", "6"])), stdout(&cecheck(&["construct", "--stages", "6"])));
}
