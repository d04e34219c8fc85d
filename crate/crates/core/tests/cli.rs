use std::path::Path;
use std::process::{Command, Output};

fn polyrefine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrefine"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn adapt_writes_history_and_svgs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = polyrefine(&[
        "adapt", "--mesh", "gen:tri:2", "--strategy", "mm", "--c-rho", "1.5", "--max-iter", "6", "--out-dir", out, "--svg-every", "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("history.csv"));
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0][0], "iter");
    for row in &rows[1..] {
        assert_eq!(row.len(), rows[0].len());
        for f in &row[..rows[0].len()] {
            assert!(f.parse::<f64>().map(f64::is_finite).unwrap_or(false), "{f:?}");
        }
    }
    for k in [2, 4, 6] {
        let svg = std::fs::read_to_string(dir.path().join(format!("mesh_{k:04}.svg"))).unwrap();
        assert!(svg.starts_with("<?xml"));
    }
    assert!(!dir.path().join("mesh_0003.svg").exists());
}

#[test]
fn same_flags_same_bytes() {
    let run = || polyrefine(&["adapt", "--mesh", "gen:poly:30", "--seed", "5", "--strategy", "ld", "--max-iter", "5"]).stdout;
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
}

#[test]
fn patch_problem_has_vanishing_estimator() {
    let o = polyrefine(&["adapt", "--mesh", "gen:trap:2", "--problem", "patch"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let eta: f64 = lines[1].split(',').nth(5).unwrap().parse().unwrap();
    assert!(eta <= 1e-10);
}

#[test]
fn uniform_and_quality() {
    let o = polyrefine(&["uniform", "--mesh", "gen:ngon:120", "--max-iter", "4"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let cells: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(cells, ["1", "2", "4", "8", "16"]);

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("square.mesh");
    let o = polyrefine(&["generate", "--mesh", "gen:ngon:4", "-o", file.to_str().unwrap()]);
    assert!(o.status.success());
    let o = polyrefine(&["quality", "--mesh", file.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[5], "");
    let ar_rr: f64 = row[12].parse().unwrap();
    assert!((ar_rr - 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    assert_eq!(polyrefine(&["adapt"]).status.code(), Some(2));
    assert_eq!(polyrefine(&["adapt", "--mesh", "gen:tri:2", "--theta", "abc"]).status.code(), Some(2));
    assert_eq!(polyrefine(&["adapt", "--mesh", "gen:tri:2", "--c-rho", "-1"]).status.code(), Some(2));
    assert_eq!(polyrefine(&["adapt", "--mesh", "gen:hex:2"]).status.code(), Some(2));
    assert_eq!(polyrefine(&["quality", "--mesh", "/nonexistent/file.mesh"]).status.code(), Some(1));
    let o = polyrefine(&["adapt", "--mesh", "gen:tri:1", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max-iter"));
}
