use std::path::Path;
use std::process::{Command, Output};

fn dualgrid(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualgrid"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_then_verify_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let g = dualgrid(dir.path(), &["patterns", "generate", "--dim", "3", "--out", "p.json"]);
    assert_eq!(g.status.code(), Some(0));
    let v = dualgrid(dir.path(), &["patterns", "verify", "--patterns", "p.json"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains("227 canonical / 6210 keys"));
}

#[test]
fn tampered_table_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    dualgrid(dir.path(), &["patterns", "generate", "--dim", "2", "--out", "p.json"]);
    let path = dir.path().join("p.json");
    let text = std::fs::read_to_string(&path).unwrap();
    let last = text.rfind("\"key\":").unwrap();
    std::fs::write(&path, &text[..last]).unwrap();
    let v = dualgrid(dir.path(), &["patterns", "verify", "--patterns", "p.json"]);
    assert_ne!(v.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dualgrid(dir.path(), &["grid", "build", "--level", "2"]).status.code(), Some(2));
    assert_eq!(dualgrid(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        dualgrid(dir.path(), &["advect", "cone", "--level", "2", "--cfl", "1.5", "--out", "x.vtk"]).status.code(),
        Some(2)
    );
}

#[test]
fn assemble_and_gauss_on_paraboloid_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(dualgrid(d, &["grid", "build", "--indicator", "paraboloid", "--level", "3", "--out", "g.json"]).status.success());
    let a = dualgrid(d, &["dual", "assemble", "--grid", "g.json", "--out", "dual.vtk", "--stats", "stats.csv"]);
    assert!(a.status.success());
    let vtk = std::fs::read_to_string(d.join("dual.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("CELL_TYPES"));
    let stats = std::fs::read_to_string(d.join("stats.csv")).unwrap();
    let mut lines = stats.lines();
    assert!(lines.next().unwrap().starts_with("leaves,"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[2], row[3], "one dual cell per primal node");
    let gauss = dualgrid(d, &["verify", "gauss", "--grid", "g.json"]);
    assert_eq!(gauss.status.code(), Some(0));
    let out = stdout(&gauss);
    let r: f64 = out.lines().next().unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(r <= 1e-12);
}

#[test]
fn impossible_tolerance_is_a_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    dualgrid(d, &["grid", "build", "--indicator", "sphere", "--level", "3", "--out", "g.json"]);
    let g = dualgrid(d, &["verify", "gauss", "--grid", "g.json", "--tol", "0"]);
    assert_eq!(g.status.code(), Some(1));
}

#[test]
fn flux_count_of_reference_grid_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let o = dualgrid(
        dir.path(),
        &[
            "analyze", "fluxcount", "--primal-cells", "112106", "--primal-faces", "345564", "--primal-nodes", "121561",
            "--dual-nodes", "152630", "--out", "fc.csv",
        ],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("fc.csv")).unwrap();
    assert_eq!(
        csv,
        "scheme,primal_to_dual,dual_to_primal,total\n\
         diamond,1345272,345564,1690836\n\
         hll,691128,691128,1382256\n\
         voronoi,457890,364683,822573\n"
    );
}

#[test]
fn cone_run_writes_series_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = dualgrid(
        d,
        &["advect", "cone", "--level", "2", "--tend", "0.2", "--every", "2", "--out", "s_%04d.vtk", "--report", "r.csv"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(d.join("r.csv")).unwrap();
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[1], "step,t,mass,min,max,L1err,Linferr");
    let steps = lines.len() - 3;
    assert!(d.join("s_0000.vtk").exists());
    assert!(d.join(format!("s_{steps:04}.vtk")).exists());
    assert!(!report.contains("NaN"));
}

#[test]
fn census_rows_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let o = dualgrid(dir.path(), &["analyze", "census", "--indicator", "uniform", "--levels", "1,2", "--out", "c.csv"]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], "64");
    assert_eq!(rows[1][2], "125");
    assert_eq!(rows[1][9], "1.000000");
}
