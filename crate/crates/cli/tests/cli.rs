use std::path::Path;
use std::process::{Command, Output};

fn ironface(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ironface"))
        .args(args)
        .env("IRONFACE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(ironface(&[]).status.code(), Some(1));
    assert_eq!(ironface(&["thermo", "--delta", "0.5", "--gamma", "1", "--t", "1"]).status.code(), Some(1));
    assert_eq!(ironface(&["thermo", "--delta", "0.5"]).status.code(), Some(1));
    assert_eq!(ironface(&["thermo", "--delta", "0.5", "--tmin", "-1", "--tmax", "2"]).status.code(), Some(1));
    assert_eq!(ironface(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_passes_and_reports_every_check() {
    let o = ironface(&["verify", "--delta", "0.5", "-L", "4", "--no-meta", "--bethe-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("check,value,threshold,passed\n"));
    for name in ["yang_baxter", "unitarity", "initial_condition", "transfer_commutator", "hamiltonian_fit", "spectral_map", "bethe_vs_dense_qtm"] {
        assert!(text.contains(&format!("{name},")), "missing {name}");
    }
    assert!(!text.contains(",false"));
}

#[test]
fn thermo_csv_matches_column_contract() {
    let o = ironface(&["thermo", "--delta", "0", "--tmin", "0.1", "--tmax", "1", "--tpoints", "3", "--log"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# ironface"));
    assert_eq!(lines.next().unwrap(), "T,beta,delta,gamma,J,f,e,s,c,iterations,residual");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    let t0: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert!((t0 - 0.1).abs() < 1e-12);
}

#[test]
fn corr_has_prediction_columns_and_json_output() {
    let o = ironface(&["corr", "--gamma", "1.5707963267948966", "--t", "0.05", "--format", "json", "--no-meta"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("meta").is_none());
    let row = &v["rows"][0];
    let b = row["beta_over_xi"].as_f64().unwrap();
    assert!((b - std::f64::consts::PI / 8.0).abs() < 0.01);
    assert!(row["kappa_pred"].as_f64().is_some());
    assert!(row["xi_inv_pred"].as_f64().is_some());
}

#[test]
fn output_file_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let p = path.to_str().unwrap();
    let args = ["corr", "--delta", "0.5", "--j", "0.1", "--tmin", "0.2", "--tmax", "2", "--tpoints", "10", "--log", "--no-meta", "-o", p];
    assert_eq!(ironface(&args).status.code(), Some(0));
    let first = std::fs::read(&path).unwrap();
    let mut single = args.to_vec();
    single.extend(["--threads", "1"]);
    assert_eq!(ironface(&single).status.code(), Some(0));
    assert_eq!(first, std::fs::read(&path).unwrap());
    // a failing run leaves neither a partial file nor temporaries behind
    let bad = dir.path().join("bad.csv");
    let o = ironface(&["thermo", "--delta", "0.5", "--t", "1", "--max-iter", "1", "-o", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!bad.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# sweep\ncommand = thermo\ndelta = 0.0\nt = 0.5\nno_meta = true\n").unwrap();
    let o = ironface(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("T,beta"));
    // command-line values win over the file
    let o = ironface(&["--config", cfg.to_str().unwrap(), "thermo", "--t", "2"]);
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("2.0,0.5,"), "{text}");
    let o = ironface(&["--config", cfg.to_str().unwrap(), "thermo", "--gamma", "1.0"]);
    assert_eq!(o.status.code(), Some(0));
    std::fs::write(&cfg, "delta 0.5\n").unwrap();
    assert_eq!(ironface(&["--config", cfg.to_str().unwrap(), "thermo"]).status.code(), Some(1));
}

#[test]
fn ed_exports_matrix_market_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let mm = dir.path().join("h.mtx");
    let o = ironface(&["ed", "--delta", "0.5", "-L", "4", "--export", mm.to_str().unwrap(), "--no-meta"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&mm).unwrap();
    assert!(text.starts_with("%%MatrixMarket"));
    let dims: Vec<&str> = text.lines().find(|l| !l.starts_with('%')).unwrap().split_whitespace().collect();
    assert_eq!(&dims[..2], ["16", "16"]);
    assert_eq!(stdout(&o).lines().count(), 17);
    let o = ironface(&["ed", "--delta", "0.5", "-L", "4", "--mapping", "--no-meta"]);
    let rows: Vec<String> = stdout(&o).lines().map(String::from).collect();
    let mismatch: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!(mismatch < 1e-10);
    assert!(Path::new(&mm).exists());
}

#[test]
fn scan_marks_the_isotropic_point() {
    let o = ironface(&["scan", "--j", "0.5", "--t", "0.5", "--delta-min", "0.5", "--delta-max", "1.5", "--points", "3", "--no-meta"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().nth(2).unwrap().ends_with(",excluded"));
    assert!(text.lines().nth(1).unwrap().ends_with(",ok"));
}

#[test]
fn fss_reports_conformal_data() {
    let o = ironface(&["fss", "--delta", "0", "--sizes", "8,10,12", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["meta"].is_string());
    let c = v["rows"][0]["c_estimate"].as_f64().unwrap();
    assert!((c - 1.0).abs() < 0.1);
    assert!((v["rows"][0]["h_pred"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}
