use std::path::Path;
use std::process::{Command, Output};

fn kaleido(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kaleido"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const H3_FIG4: &str = "0.44279,0.03381,0.08061,0.44279";

#[test]
fn classify_names_c3() {
    let o = kaleido(&["classify", "--masses", "3,1,2,6"]);
    assert!(o.status.success());
    let line = stdout(&o);
    assert!(line.starts_with("C3 deviation 0 "), "{line}");
}

#[test]
fn validation_errors_exit_2_with_one_line() {
    let o = kaleido(&["classify", "--masses", "1,0,2,3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.trim().lines().count(), 1);

    assert_eq!(kaleido(&["billiard", "--masses", "1,1,1"]).status.code(), Some(2));
    assert_eq!(kaleido(&["exact"]).status.code(), Some(2));
    assert_eq!(kaleido(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_3() {
    // A non-Coxeter mass set has no finite reflection group.
    let o = kaleido(&["group", "--masses", "1,2,3,5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn family_csv_contains_equal_end_masses() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("h3.csv");
    let o = kaleido(&["family", "--spec", "H3", "--grid", "200", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,mu1,mu2,mu3,mu4"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(rows.len() >= 200);
    assert!(rows
        .iter()
        .any(|r| (r[1] - r[4]).abs() < 1e-9 && (r[1] - 0.44279).abs() < 1e-5));
    assert!(Path::new(&format!("{}.meta.json", out.display())).exists());
}

#[test]
fn billiard_coxeter_sector_starts_at_fifteen() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    let o = kaleido(&[
        "billiard",
        "--masses",
        H3_FIG4,
        "--ordering",
        "1,2,3,4",
        "--n-max",
        "40",
        "--k",
        "50",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,eigenvalue,lambda_eff,delta_last_refinement"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let lambda: f64 = first[2].parse().unwrap();
    // Five-digit masses sit slightly off the exact family member.
    assert!((lambda - 15.0).abs() < 0.01, "{lambda}");
    assert_eq!(text.lines().count(), 51);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.meta.json", out.display())).unwrap()).unwrap();
    assert_eq!(meta["resolved"]["n_max"], 40);
    assert_eq!(meta["resolved"]["quadrature_order"], 120);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = kaleido(&[
            "billiard",
            "--masses",
            "1,2,3,4",
            "--ordering",
            "1342",
            "--n-max",
            "12",
            "--k",
            "10",
            "-o",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "masses = [1.0, 1.0, 1.0, 1.0]\n[billiard]\nn_max = 99\nk_levels = 3\n",
    )
    .unwrap();
    let out = dir.path().join("s.csv");
    let o = kaleido(&[
        "billiard",
        "--config",
        cfg.to_str().unwrap(),
        "--n-max",
        "10",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.meta.json", out.display())).unwrap()).unwrap();
    assert_eq!(meta["resolved"]["n_max"], 10);
}

#[test]
fn exact_levels_csv() {
    let o = kaleido(&["exact", "--spec", "A3", "--e-max", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("n,nu,n1,n2,lambda,energy\n0,0,0,0,6,8\n"), "{text}");
}

#[test]
fn geometry_and_weyl_outputs() {
    let o = kaleido(&["geometry", "--masses", "1,1,1,1"]);
    let g: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((g["area"].as_f64().unwrap() - 4.0 * std::f64::consts::PI / 24.0).abs() < 1e-11);

    let o = kaleido(&["weyl", "--masses", "1,1,1,1", "--e-max", "100", "--points", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn stats_requires_output_directory() {
    let o = kaleido(&["stats", "--masses", "1,1,1,1", "--n-max", "12"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stats_writes_every_distinct_sector() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats");
    let o = kaleido(&[
        "stats",
        "--masses",
        "1,1,1,1",
        "--n-max",
        "30",
        "--refine-from",
        "24",
        "--k",
        "120",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("1 distinct sectors"));
    for f in [
        "sector_1234_spectrum.csv",
        "sector_1234_histogram.csv",
        "sector_1234_weyl.csv",
        "reference_curves.csv",
        "summary.json",
        "run.meta.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["sectors"][0]["spacing"]["ks_poisson"].is_number());
}

#[test]
fn help_lists_defaults() {
    let o = kaleido(&["billiard", "--help"]);
    let text = stdout(&o);
    assert!(text.contains("default: 40"));
    assert!(text.contains("3·n_max"));
    let o = kaleido(&["stats", "--help"]);
    assert!(stdout(&o).contains("default: 24"));
}
