use std::fs;
use std::path::Path;
use std::process::Command;

fn daisyworld(out: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_daisyworld"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("DAISYWORLD_OUT")
        .output()
        .unwrap()
}

fn manifest(out: &Path, command: &str) -> serde_json::Value {
    let text = fs::read_to_string(out.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn equilibria_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = daisyworld(dir.path(), &["equilibria", "--L", "0.8,1.0,1.6"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("equilibria.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), daisyworld::io::EQUILIBRIA_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 10));
    assert!(rows.iter().any(|r| r[3] == "e5" && r[4] == "stable-node"));
    let m = manifest(dir.path(), "equilibria");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["outputs"][0], "equilibria.csv");
    assert_eq!(m["config"]["equilibria"]["luminosities"][2], 1.6);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn continue_reports_the_white_fold() {
    let dir = tempfile::tempdir().unwrap();
    let o = daisyworld(dir.path(), &["continue", "--from", "e2", "--L", "1.4", "--direction", "up"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let folds = fs::read_to_string(dir.path().join("folds.csv")).unwrap();
    let fold: Vec<&str> = folds.lines().nth(1).unwrap().split(',').collect();
    let l: f64 = fold[1].parse().unwrap();
    assert!((l - 1.5524).abs() < 1e-3, "{l}");
    let branches = fs::read_to_string(dir.path().join("branches.csv")).unwrap();
    assert!(branches.starts_with("branch,L,alpha_w"));
    assert_eq!(branches.lines().filter(|l| l.ends_with(",1")).count(), 1);
}

#[test]
fn tip_at_the_two_showcase_rates() {
    let dir = tempfile::tempdir().unwrap();
    for (r, expected) in [("0.5", "track"), ("1.0", "tip")] {
        let o = daisyworld(dir.path(), &["tip", "--Lmin", "0.8", "--dL", "0.4", "--r", r]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8(o.stdout).unwrap();
        assert!(stdout.contains(&format!("classification={expected}")), "{stdout}");
        let outcome: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("tip_outcome.json")).unwrap()).unwrap();
        assert_eq!(outcome["crossed_manifold"], expected == "tip");
    }
    let traj = fs::read_to_string(dir.path().join("tip_trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next().unwrap(), "t,alpha_w,alpha_b,L,T_e");
}

#[test]
fn zero_amplitude_tracks() {
    let dir = tempfile::tempdir().unwrap();
    let o = daisyworld(dir.path(), &["tip", "--Lmin", "0.8", "--dL", "0.0", "--r", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("classification=track"));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // outside the accepted luminosity range
    let o = daisyworld(dir.path(), &["equilibria", "--L", "2.5"]);
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.starts_with("error kind=configuration"), "{stderr}");
    assert_eq!(stderr.lines().count(), 1);

    // the ramp leaves the coexistence range
    let o = daisyworld(dir.path(), &["tip", "--dL", "0.7", "--no-manifold"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(manifest(dir.path(), "tip")["status"], "failed");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[tip]\nspeed = 2\n").unwrap();
    let o = daisyworld(dir.path(), &["--config", bad.to_str().unwrap(), "tip"]);
    assert_eq!(o.status.code(), Some(1));
    // a node has no stable manifold to trace
    let o = daisyworld(dir.path(), &["manifold", "--label", "e5", "--L", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = daisyworld(dir.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error kind=usage"));
}

#[test]
fn numerical_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // far too little time for most cells to settle
    let config = dir.path().join("short.toml");
    fs::write(&config, "[integrator]\nmax_time = 1.0\n").unwrap();
    let o = daisyworld(dir.path(), &["--config", config.to_str().unwrap(), "basins", "--resolution", "11"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error kind=too_many_unresolved"));
    assert_eq!(manifest(dir.path(), "basins")["status"], "failed");
}

const SMALL: &str = r#"
[basins]
resolution = 31

[diagram]
r_points = 4
delta_l_points = 5

[reproduce]
portrait_luminosities = [1.0, 1.3]
showcase_rates = [0.5, 1.0]
surface_luminosities = [1.2, 1.3]
diagram = true
"#;

fn bundle(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let config = dir.join("small.toml");
    fs::write(&config, SMALL).unwrap();
    let out = dir.join("out");
    let o = daisyworld(&out, &["--config", config.to_str().unwrap(), "--workers", "2", "reproduce-figures-data"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn figure_bundle_is_complete_and_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = bundle(a.path());
    let second = bundle(b.path());
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "fig1a_branches.csv",
        "fig1a_folds.csv",
        "fig1b_L1.0000_equilibria.csv",
        "fig2_emission_temperature.csv",
        "fig3_ramp_white.csv",
        "fig3_ramp_black.csv",
        "fig3_ramps.json",
        "fig4_trajectory_r0.5.csv",
        "fig4_trajectory_r1.csv",
        "fig4_outcomes.json",
        "fig4_manifold_surface.csv",
        "figbi_basins_L_BI.csv",
        "figbi_basins_L_max.json",
        "figbi_summary.json",
        "fig5_diagram.csv",
        "fig5_critical.csv",
        "fig5_summary.json",
    ] {
        assert!(names.contains(&expected), "missing {expected} in {names:?}");
    }
    assert_eq!(first.len(), second.len());
    for ((na, da), (nb, db)) in first.iter().zip(&second) {
        assert_eq!(na, nb);
        assert!(da == db, "{na} differs between runs");
    }
    let m = manifest(&a.path().join("out"), "reproduce-figures-data");
    assert_eq!(m["status"], "ok");
    let outcomes: serde_json::Value = serde_json::from_slice(
        &first.iter().find(|(n, _)| n == "fig4_outcomes.json").unwrap().1,
    )
    .unwrap();
    assert_eq!(outcomes[0]["classification"], "track");
    assert_eq!(outcomes[1]["classification"], "tip");
}
