use std::path::Path;
use std::process::{Command, Output};

fn dnp(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_dnp"))
        .args(&args[..1])
        .arg("--config")
        .arg(&cfg)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn csv(out: &Output) -> Vec<Vec<String>> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const FIRST_SHELL_GOLDEN: &str = r#"
method = "golden"
[model]
levels = "five"
gamma_dep_per_s = 0.0
[field]
start_mt = 99.0
end_mt = 107.0
points = 81
"#;

#[test]
fn rates_peak_at_w_plus_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let rows = csv(&dnp(dir.path(), FIRST_SHELL_GOLDEN, &["rates"]));
    assert_eq!(
        rows[0][..4],
        ["B_mT", "Delta_MHz", "Delta_N_MHz", "Gamma_MHz"]
    );
    let col = rows[0]
        .iter()
        .position(|h| h == "W_plus_per_s_golden")
        .unwrap();
    let best = rows[1..]
        .iter()
        .max_by(|a, b| {
            a[col]
                .parse::<f64>()
                .unwrap()
                .total_cmp(&b[col].parse().unwrap())
        })
        .unwrap();
    let b: f64 = best[0].parse().unwrap();
    assert!((b - 100.07).abs() <= 0.1, "{b}");
}

#[test]
fn two_methods_add_discrepancy_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
methods = ["golden", "resolvent"]
[model]
levels = "five"
coupling = "secular"
pump_rate_mhz = 0.2
[nuclei]
source = "explicit"
sites = [{ position = [3.0, 2.0, 6.0] }]
[field]
start_mt = 102.3
end_mt = 102.5
points = 3
"#;
    let rows = csv(&dnp(dir.path(), cfg, &["rates"]));
    assert_eq!(rows[0].last().unwrap(), "rel_discrepancy");
    assert_eq!(rows.len(), 4);
    for r in &rows[1..] {
        let d: f64 = r.last().unwrap().parse().unwrap();
        assert!(d < 0.01, "{d}");
    }
}

#[test]
fn sweep_columns_and_single_point() {
    let dir = tempfile::tempdir().unwrap();
    let rows = csv(&dnp(
        dir.path(),
        FIRST_SHELL_GOLDEN,
        &["sweep", "--set", "field.points=1"],
    ));
    assert_eq!(rows.len(), 2);
    assert_eq!(
        rows[0],
        [
            "B_mT",
            "p_ss",
            "W_per_s",
            "W_plus_per_s",
            "W_minus_per_s",
            "markovian_valid"
        ]
    );
}

#[test]
fn sweep_map_mode_has_theta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
method = "golden"
[model]
pump_rate_mhz = 0.2
[field]
start_mt = 102.3
end_mt = 102.5
points = 3
[map]
radius_angstrom = 20.0
theta_points = 5
"#;
    let rows = csv(&dnp(dir.path(), cfg, &["sweep"]));
    assert_eq!(rows[0][1], "theta_deg");
    assert_eq!(rows.len(), 1 + 15);
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = r#"
[nuclei]
source = "lattice"
seed = 3
r_min = 5.0
r_max = 14.0
[model]
pump_rate_mhz = 0.2
[field]
start_mt = 102.3
end_mt = 102.5
points = 9
[multispin]
report_fields_mt = [102.37]
"#;
    for (path, jobs) in [(&a, "1"), (&b, "4")] {
        let out = dnp(
            dir.path(),
            cfg,
            &["multispin", "--jobs", jobs, "--out", path.to_str().unwrap()],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ja = std::fs::read(dir.path().join("a.csv.json")).unwrap();
    assert_eq!(ja, std::fs::read(dir.path().join("b.csv.json")).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    for key in ["B_mT", "p_bar", "h_ss_MHz", "sites"] {
        assert!(json[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn multispin_overlays_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
methods = ["meanfield", "exact_joint"]
[nuclei]
source = "explicit"
sites = [{ position = [3.0, 2.0, 6.0] }, { position = [-4.0, 1.0, 5.0] }, { position = [0.0, -5.0, -6.0] }]
[model]
pump_rate_mhz = 0.2
[field]
start_mt = 102.3
end_mt = 102.5
points = 5
"#;
    let rows = csv(&dnp(dir.path(), cfg, &["multispin"]));
    assert_eq!(
        rows[0],
        [
            "R_MHz",
            "B_mT",
            "p_bar_meanfield",
            "h_ss_MHz_meanfield",
            "p_bar_exact_joint",
            "h_ss_MHz_exact_joint"
        ]
    );
    for r in &rows[1..] {
        let mf: f64 = r[2].parse().unwrap();
        let ex: f64 = r[4].parse().unwrap();
        assert!((mf - ex).abs() < 0.05);
    }
}

#[test]
fn evolve_rate_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
method = "golden"
[model]
pump_rate_mhz = 0.2
[nuclei]
source = "explicit"
sites = [{ position = [0.0, 0.0, 0.0001], ground = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]] }]
[field]
start_mt = 102.4
[evolve]
t_max_us = 10.0
steps = 4
p0 = 0.3
"#;
    let rows = csv(&dnp(
        dir.path(),
        cfg,
        &["evolve", "--set", "model.gamma_dep_per_s=0"],
    ));
    assert_eq!(rows[0], ["t_us", "p"]);
    // no coupling, no depolarization: flat line
    assert!(rows[1..].iter().all(|r| r[1] == "0.3"));
}

#[test]
fn lattice_round_trips_through_file_source() {
    let dir = tempfile::tempdir().unwrap();
    let lat = dir.path().join("lat.json");
    let cfg = "[nuclei]\nsource = \"lattice\"\nseed = 7\nr_max = 12.0\n[field]\nstart_mt = 102.4\n";
    let out = dnp(
        dir.path(),
        cfg,
        &["lattice", "--out", lat.to_str().unwrap()],
    );
    assert!(out.status.success());
    let n = serde_json::from_slice::<serde_json::Value>(&std::fs::read(&lat).unwrap())
        .unwrap()
        .as_array()
        .unwrap()
        .len();
    assert!(n > 0);
    let cfg2 = format!(
        "method = \"meanfield\"\n[nuclei]\nsource = \"file\"\npath = {:?}\n[field]\nstart_mt = 102.4\n",
        lat.to_str().unwrap()
    );
    let rows = csv(&dnp(dir.path(), &cfg2, &["multispin"]));
    assert_eq!(rows.len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // malformed config names the field
    let bad = dnp(dir.path(), "[field]\nstart_mt = \"x\"\n", &["sweep"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("field.start_mt"));
    // lindblad is not a rate method
    let wrong = dnp(
        dir.path(),
        FIRST_SHELL_GOLDEN,
        &["rates", "--set", "method=lindblad"],
    );
    assert_eq!(wrong.status.code(), Some(2));
    // exact_joint beyond 12 nuclei
    let big = "method = \"exact_joint\"\n[nuclei]\nsource = \"lattice\"\nr_max = 20.0\n[field]\nstart_mt = 102.4\n";
    assert_eq!(dnp(dir.path(), big, &["multispin"]).status.code(), Some(2));
    // empty draw
    let empty = "[nuclei]\nsource = \"lattice\"\nabundance = 0.0\n[field]\nstart_mt = 102.4\n";
    let e = dnp(dir.path(), empty, &["multispin"]);
    assert_eq!(e.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&e.stderr).contains("empty ensemble"));
    // unwritable output
    let io = dnp(
        dir.path(),
        FIRST_SHELL_GOLDEN,
        &["sweep", "--out", "/nonexistent/dir/x.csv"],
    );
    assert_eq!(io.status.code(), Some(3));
}
