use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pasf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pasf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn pasf")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn error_line(o: &Output) -> String {
    stderr(o)
        .lines()
        .find(|l| l.starts_with("error: kind="))
        .unwrap_or_else(|| panic!("no error line in {:?}", stderr(o)))
        .to_string()
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pasf(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(pasf(dir.path(), &["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = pasf(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).starts_with("error: kind=usage message="));

    let o = pasf(dir.path(), &["design-iir", "--rho-tilde", "10", "--period", "50"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_design_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = pasf(
        dir.path(),
        &["design-iir", "--rho-tilde", "0", "--period", "50", "--dt", "0.001", "--order", "1"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).contains("kind=degenerate-design"));
}

#[test]
fn missing_input_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = pasf(dir.path(), &["bode", "absent.coef"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(error_line(&o).contains("kind=io"));
}

#[test]
fn malformed_scenario_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "name = \"x\"\nsampling_time = 0.001\nperiod = = 3\n").unwrap();
    let o = pasf(dir.path(), &["scenario", "bad.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let line = error_line(&o);
    assert!(line.contains("kind=parse") && line.contains("line 3"), "{line}");
}

#[test]
fn design_complement_bode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = pasf(
        d,
        &["design-iir", "--rho-tilde", "10", "--period", "50", "--dt", "0.001", "--order", "2"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(pasf(d, &["complement", "iir2_periodic.coef"]).status.success());

    // 1 - F_p keeps the denominator and takes numerator d_i = a_i - b_i.
    let periodic = fs::read_to_string(d.join("iir2_periodic.coef")).unwrap();
    let complement = fs::read_to_string(d.join("iir2_periodic_complement.coef")).unwrap();
    let rows = |s: &str| -> Vec<Vec<f64>> {
        s.lines().skip(1).map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect()).collect()
    };
    let (p, c) = (rows(&periodic), rows(&complement));
    assert_eq!(p[0], c[0]);
    let a: Vec<f64> = std::iter::once(1.0).chain(p[0].iter().copied()).collect();
    for i in 0..3 {
        assert!((c[1][i] - (a[i] - p[1][i])).abs() < 1e-12, "{c:?}");
    }

    let o = pasf(d, &["bode", "iir2_periodic.coef", "--points", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bode = fs::read_to_string(d.join("iir2_periodic_bode.csv")).unwrap();
    assert_eq!(bode.lines().next(), Some("omega_rad_s,gain_db,phase_deg"));
    assert_eq!(bode.lines().count(), 8);
}

#[test]
fn design_fir_writes_both_filters() {
    let dir = tempfile::tempdir().unwrap();
    let o = pasf(
        dir.path(),
        &["design-fir", "--rho-tilde", "10", "--period", "50", "--dt", "0.001", "--order", "20"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("fir20_periodic.coef").exists());
    assert!(dir.path().join("fir20_aperiodic.coef").exists());
}

#[test]
fn separate_splits_a_constant_into_the_periodic_part() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,x\n");
    for k in 0..400 {
        csv.push_str(&format!("{},{}\n", k as f64 * 0.001, 1.0));
    }
    fs::write(dir.path().join("in.csv"), csv).unwrap();
    let o = pasf(
        dir.path(),
        &[
            "separate", "in.csv", "--rho-tilde", "100", "--period", "4", "--dt", "0.001", "--output", "out.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = fs::read_to_string(dir.path().join("out.csv")).unwrap();
    let last: Vec<f64> = out.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[2] - 1.0).abs() < 1e-6 && last[3].abs() < 1e-6, "{last:?}");
}

#[test]
fn separate_rejects_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("in.csv"), "time,x\n0,1\n").unwrap();
    let o = pasf(
        dir.path(),
        &["separate", "in.csv", "--rho-tilde", "10", "--period", "4", "--dt", "0.001"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(error_line(&o).contains("kind=parse"));
}

#[test]
fn kfpasf_streams_a_measurement_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("model.toml"),
        "a = [[1.0, 0.001], [-1.0, 0.99]]\nb = [[0.0], [0.001]]\nc = [[1.0, 0.0]]\n\
         q = [[1e-8, 0.0], [0.0, 1e-8]]\nr = [[0.01]]\n",
    )
    .unwrap();
    let mut csv = String::from("t,u_1,y_1\n");
    for k in 0..200 {
        csv.push_str(&format!("{},{},{}\n", k as f64 * 0.001, 1.0, 0.0));
    }
    fs::write(d.join("meas.csv"), csv).unwrap();
    let o = pasf(
        d,
        &[
            "kfpasf", "meas.csv", "--model", "model.toml", "--rho-tilde", "10", "--period", "10", "--dt", "0.001",
            "--output", "est.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = fs::read_to_string(d.join("est.csv")).unwrap();
    assert_eq!(
        out.lines().next(),
        Some("t,y_1,xhat_1,xhat_2,xp_hat_1,xp_hat_2,xa_hat_1,xa_hat_2,trP")
    );
    assert_eq!(out.lines().count(), 201);
}

#[test]
fn scenario_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        let o = pasf(d, &["scenario", "sec53", "--seed", "7", "--out-dir", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(d.join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for expected in ["comb1.csv", "comb2.csv", "comb3.csv", "pasf_iir3.csv", "interference.csv", "metrics.csv"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    for n in names {
        assert_eq!(fs::read(d.join("a").join(&n)).unwrap(), fs::read(d.join("b").join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn replicas_merge_in_seed_order() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = pasf(d, &["scenario", "sec53", "--seed", "40", "--replicas", "3", "--no-plot-script"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let merged = fs::read_to_string(d.join("replicas.csv")).unwrap();
    let seeds: Vec<&str> = merged.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["40", "41", "42"]);
    assert!(d.join("seed_41/metrics.csv").exists());
    assert!(!d.join("seed_41/plot_sec53.py").exists());

    // Each replica equals a single run with the same seed.
    let o = pasf(d, &["scenario", "sec53", "--seed", "41", "--out-dir", "single", "--no-plot-script"]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(d.join("seed_41/metrics.csv")).unwrap(),
        fs::read(d.join("single/metrics.csv")).unwrap()
    );
}

#[test]
fn plot_script_runs_against_emitted_csv() {
    let has_matplotlib = Command::new("python3")
        .args(["-c", "import matplotlib"])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    if !has_matplotlib {
        eprintln!("python3 with matplotlib not found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let o = pasf(dir.path(), &["scenario", "sec53"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let script = dir.path().join("plot_sec53.py");
    let run = Command::new("python3").arg(&script).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(dir.path().join("sec53.png").exists());
}
