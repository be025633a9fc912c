use std::path::PathBuf;
use std::process::{Command, Output};

fn tlsheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlsheat")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tlsheat-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Data rows of a single-table CSV as header-keyed records.
fn records(csv: &str) -> Vec<Vec<(String, String)>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn field<'a>(row: &'a [(String, String)], key: &str) -> &'a str {
    &row.iter().find(|(k, _)| k == key).unwrap().1
}

fn meta<'a>(csv: &'a str, key: &str) -> Option<&'a str> {
    csv.lines().find_map(|l| l.strip_prefix("# ")?.strip_prefix(key)?.strip_prefix(": "))
}

#[test]
fn presets_lists_reference_values() {
    let out = tlsheat(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["fig2,resonator.f_r0,520808275", "fig3,tls.n_s,128.0", "fig3,thermal.gamma,2.83"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn hysteretic_sweep_reports_one_jump_each_way() {
    let out = tlsheat(&["sweep-s11", "--preset", "fig2", "--ps", "-130dBm", "--direction", "both"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(out.stdout).unwrap();
    let up = meta(&csv, "jumps.up").unwrap();
    let down = meta(&csv, "jumps.down").unwrap();
    assert!(up != "[]" && !up.contains(','), "up {up}");
    assert!(down != "[]" && !down.contains(','), "down {down}");
    let rows = records(&csv);
    assert_eq!(rows.len(), 802);
    assert!(rows.iter().all(|r| field(r, "converged") == "true"));
}

#[test]
fn strongly_heated_sweep_still_has_single_jumps() {
    let out = tlsheat(&["sweep-s11", "--ps", "-100dBm"]);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(!meta(&csv, "jumps.up").unwrap().contains(','));
    assert!(!meta(&csv, "jumps.down").unwrap().contains(','));
}

#[test]
fn linear_swenson_branch_is_the_identity() {
    let out = tlsheat(&["swenson", "--a", "0", "--y0-range", "-2:2:41", "--direction", "up"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    for r in records(&csv) {
        let y0: f64 = field(&r, "y0").parse().unwrap();
        let y: f64 = field(&r, "y").parse().unwrap();
        assert!((y - y0).abs() < 1e-12, "{y0} -> {y}");
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["sweep-s11", "--points", "61", "--ps", "-128dBm"];
    let a = tlsheat(&args).stdout;
    let b = tlsheat(&args).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let path = scratch("bad.toml");
    std::fs::write(&path, "[tls]\nn_s = 100\nmystery = 3\n").unwrap();
    let out = tlsheat(&["sweep-s11", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("mystery") && err.contains("line 3"), "{err}");
}

#[test]
fn invalid_parameters_and_flags_exit_two() {
    assert_eq!(tlsheat(&["sweep-s11", "--set", "tls.n_s=-1"]).status.code(), Some(2));
    assert_eq!(tlsheat(&["sweep-s11", "--preset", "nonesuch"]).status.code(), Some(2));
    assert_eq!(tlsheat(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn exhausted_solver_exits_three() {
    let out = tlsheat(&["sweep-s11", "--set", "solver.mixing_only=true", "--set", "solver.max_mixing_iter=1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flags_layer_in_order() {
    let path = scratch("run.toml");
    std::fs::write(&path, "preset = \"fig3\"\n[sweep_s11]\nps = \"-140dBm\"\npoints = 11\n").unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = String::from_utf8(tlsheat(&["sweep-s11", "--config", cfg]).stdout).unwrap();
    assert_eq!(records(&from_file).len(), 22);
    assert_eq!(meta(&from_file, "param.args.ps"), Some("1e-17"));
    let flagged =
        String::from_utf8(tlsheat(&["sweep-s11", "--config", cfg, "--set", "sweep_s11.points=5", "--points", "7"]).stdout)
            .unwrap();
    assert_eq!(records(&flagged).len(), 14);
    assert_ne!(meta(&from_file, "config_sha256"), meta(&flagged, "config_sha256"));
}

#[test]
fn json_carries_the_same_rows() {
    let args = ["swenson", "--a", "-2", "--y0-range", "-1:1:5", "--direction", "down"];
    let csv = String::from_utf8(tlsheat(&args).stdout).unwrap();
    let mut jargs = args.to_vec();
    jargs.extend(["--format", "json"]);
    let json: serde_json::Value = serde_json::from_slice(&tlsheat(&jargs).stdout).unwrap();
    let rows = json["tables"].as_object().unwrap().values().next().unwrap().as_array().unwrap().clone();
    let csv_rows = records(&csv);
    assert_eq!(rows.len(), csv_rows.len());
    for (j, c) in rows.iter().zip(&csv_rows) {
        let y: f64 = field(c, "y").parse().unwrap();
        assert_eq!(j["y"].as_f64().unwrap(), y);
    }
}

#[test]
fn phase_diagram_writes_contour_beside_output() {
    let path = scratch("pd.csv");
    let out = tlsheat(&[
        "phase-diagram",
        "--ps-range",
        "-150:-110:9",
        "--param-range",
        "1e-6:1e-4:5",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let contour = path.with_file_name("pd.contour.csv");
    assert!(contour.exists());
    let cells = std::fs::read_to_string(&path).unwrap();
    assert_eq!(records(&cells).len(), 45);
}

#[test]
fn thermal_conductance_reports_crossover() {
    let out = tlsheat(&["thermal-conductance", "--t-range", "25mK:100mK:4"]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let t1d: f64 = meta(&csv, "t_1d_K").unwrap().parse().unwrap();
    assert!((t1d - 0.024).abs() < 0.001, "{t1d}");
}
