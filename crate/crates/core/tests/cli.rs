use std::path::Path;
use std::process::{Command, Output};

use fnlab::precision::parse_real;
use fnlab::report::{Format, Report};

fn fnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fnlab"))
        .args(args)
        .env_remove("FNLAB_PREC_BITS")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn eval_prints_every_method() {
    let o = fnlab(&["eval", "--n", "1", "--x", "1.0", "--prec-bits", "256"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    for m in ["bernoulli-series", "laguerre-series", "eulerian-closed", "hermite-integral"] {
        let line = out.lines().find(|l| l.contains(m)).unwrap_or_else(|| panic!("{m} missing:\n{out}"));
        assert!(line.contains("6.61303112661534"), "{line}");
    }
    assert!(out.contains("consensus sign: positive"));
}

#[test]
fn eval_f0_closed_form() {
    let o = fnlab(&["eval", "--n", "0", "--x", "1.0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1.58197670686932"));
}

#[test]
fn usage_errors_exit_64() {
    let o = fnlab(&["frobnicate"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&fnlab(&["scan", "--nope"])), 64);
    assert_eq!(code(&fnlab(&["eval", "--alpha", "-0.5"])), 64);
    assert_eq!(code(&fnlab(&["gmm", "--n", "0"])), 64);
}

#[test]
fn unwritable_path_exits_74() {
    let o = fnlab(&["eval", "--n", "1", "--x", "1", "--json", "/nonexistent-dir/out.json"]);
    assert_eq!(code(&o), 74);
}

#[test]
fn csv_grid_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let o = fnlab(&["scan", "--n", "2", "--n-max", "4", "--x-min", "1", "--x-max", "4", "--grid", "3", "--csv", p(&csv), "--quiet"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# manifest {"));
    assert_eq!(lines[1], "n,x,value,error_bound,sign,method");
    assert_eq!(lines.len(), 2 + 9);
    let rep = Report::from_csv(&text).unwrap();
    assert_eq!(rep.cells.len(), 9);
    assert_eq!(rep.manifest.command, "scan");
    let x = parse_real(&rep.cells[0].x, 256).unwrap();
    assert_eq!(x, 2);
}

#[test]
fn json_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |path: &Path| -> Vec<String> {
        ["scan", "--n-max", "3", "--x-min", "log2", "--x-max", "2", "--grid", "4", "--quiet", "--json"]
            .iter()
            .map(|s| s.to_string())
            .chain([path.display().to_string()])
            .collect()
    };
    let aa = args(&a);
    let bb = args(&b);
    assert_eq!(code(&fnlab(&aa.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    assert_eq!(code(&fnlab(&bb.iter().map(String::as_str).collect::<Vec<_>>())), 0);
    let ja = std::fs::read(&a).unwrap();
    assert_eq!(ja, std::fs::read(&b).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    let cell = &v["cells"][0];
    for key in ["n", "x", "value", "error_bound", "sign", "method"] {
        assert!(cell.get(key).is_some(), "missing {key}");
    }
    assert!(cell["x"].is_string() && cell["n"].is_u64());
    assert_eq!(v["manifest"]["parameters"]["x_min"], "log2");
    let rep = Report::read(&a, Format::Json).unwrap();
    assert_eq!(rep.cells.len(), 16);
}

#[test]
fn precision_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e.json");
    let o = Command::new(env!("CARGO_BIN_EXE_fnlab"))
        .args(["eval", "--n", "2", "--x", "1", "--method", "eulerian-closed", "--quiet", "--json", p(&path)])
        .env("FNLAB_PREC_BITS", "200")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(Report::read(&path, Format::Json).unwrap().manifest.precision_bits, 200);
    let o = Command::new(env!("CARGO_BIN_EXE_fnlab"))
        .args(["eval", "--prec-bits", "96", "--quiet", "--json", p(&path), "--method", "eulerian-closed"])
        .env("FNLAB_PREC_BITS", "200")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(Report::read(&path, Format::Json).unwrap().manifest.precision_bits, 96);
    let o = Command::new(env!("CARGO_BIN_EXE_fnlab"))
        .args(["eval"])
        .env("FNLAB_PREC_BITS", "lots")
        .output()
        .unwrap();
    assert_eq!(code(&o), 64);
}

#[test]
fn experiment_commands() {
    let o = fnlab(&["sn", "--n-max", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1.16130311266153"));

    let o = fnlab(&["roottest", "--n", "1", "--j-max", "100"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("r_100"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.json");
    let o = fnlab(&["feldheim", "--n-max", "3", "--json", p(&path)]);
    assert_eq!(code(&o), 0);
    let rep = Report::read(&path, Format::Json).unwrap();
    assert_eq!(
        serde_json::to_value(rep.manifest.validated_feldheim_weight).unwrap(),
        "gaussian-corrected"
    );

    let o = fnlab(&["gmm", "--n", "1", "--x", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("7.591797394709"));

    let o = fnlab(&["frontier", "--n", "5", "--x-min", "0.01", "--x-max", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("no-sign-change-found"));
}

#[test]
fn hunt_budget_is_flagged() {
    let o = fnlab(&["hunt", "--n", "1", "--n-max", "3", "--x-min", "0.05", "--x-max", "0.69", "--budget", "40"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("budget exhausted"));
}
