//! End-to-end checks of the `polmem` binary: exit codes, output files,
//! and byte-level determinism of the JSON summaries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_polmem")
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("polmem-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(experiment: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(bin())
        .arg("run")
        .arg(experiment)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn loss_scan_example_values() {
    let root = workspace_root();
    let out = tmp_dir("loss");
    let res = run("loss-scan", &root.join("configs/loss_scan.toml"), &out, &[]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(out.join("loss-scan.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "n_atoms,n_or_alpha,f_computed,f_reference,infidelity,reference_match"
    );
    let want = [(4, 0.75), (6, 5.0 / 6.0), (8, 0.875)];
    for (line, (n_atoms, f)) in lines.zip(want) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], n_atoms.to_string());
        let computed: f64 = cols[2].parse().unwrap();
        assert!((computed - f).abs() < 1e-12, "N={n_atoms}: {computed}");
    }

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("loss-scan_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["experiment"], "loss-scan");
    for a in summary["assertions"].as_array().unwrap() {
        assert_eq!(a["passed"], true, "{a}");
    }
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn identical_config_and_seed_is_byte_identical() {
    let root = workspace_root();
    let cfg = root.join("configs/motion_mc.toml");
    let (a, b) = (tmp_dir("det-a"), tmp_dir("det-b"));
    for out in [&a, &b] {
        let res = run("motion-mc", &cfg, out, &["--seed", "42"]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let ja = fs::read(a.join("motion-mc_summary.json")).unwrap();
    let jb = fs::read(b.join("motion-mc_summary.json")).unwrap();
    assert_eq!(ja, jb, "summaries differ between identical runs");
    let ca = fs::read(a.join("motion-mc.csv")).unwrap();
    let cb = fs::read(b.join("motion-mc.csv")).unwrap();
    assert_eq!(ca, cb, "CSV differs between identical runs");
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
}

#[test]
fn seed_changes_the_fingerprint_and_results() {
    let root = workspace_root();
    let cfg = root.join("configs/motion_mc.toml");
    let (a, b) = (tmp_dir("seed-a"), tmp_dir("seed-b"));
    assert!(run("motion-mc", &cfg, &a, &["--seed", "1"]).status.success());
    assert!(run("motion-mc", &cfg, &b, &["--seed", "2"]).status.success());
    let ja: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("motion-mc_summary.json")).unwrap())
            .unwrap();
    let jb: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("motion-mc_summary.json")).unwrap())
            .unwrap();
    assert_ne!(ja["config_fingerprint"], jb["config_fingerprint"]);
    assert_ne!(
        ja["results"]["fitted_rate"],
        jb["results"]["fitted_rate"]
    );
    let _ = fs::remove_dir_all(&a);
    let _ = fs::remove_dir_all(&b);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let out = tmp_dir("badkey");
    let cfg = out.join("bad.toml");
    fs::write(&cfg, "n_list = [4]\nquanta = [1]\nbogus = 3\n").unwrap();
    let res = run("spinflip-scan", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let out = tmp_dir("badexp");
    let cfg = out.join("empty.toml");
    fs::write(&cfg, "").unwrap();
    let res = run("no-such-experiment", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn missing_seed_for_monte_carlo_is_a_config_error() {
    let out = tmp_dir("noseed");
    let cfg = out.join("motion.toml");
    fs::write(
        &cfg,
        "n_atoms = 8\nn_quanta = 1\ndiffusion = 1.0\nt_final = 1.0\ndt = 0.005\nn_trajectories = 200\n",
    )
    .unwrap();
    let res = run("motion-mc", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn resource_cap_exit_code() {
    let out = tmp_dir("cap");
    let cfg = out.join("huge.toml");
    // The exact engine embeds into the 2^N product basis; N = 64 blows
    // the dimension cap and must exit with the resource-cap code.
    fs::write(&cfg, "n_list = [64]\nquanta = [1]\nengine = \"exact\"\n").unwrap();
    let res = run("spinflip-scan", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn failed_assertion_exit_code() {
    let out = tmp_dir("assert");
    let cfg = out.join("narrow.toml");
    // A slope fit over a tiny low-N grid falls outside -1.0 +/- 0.1, so
    // the run completes but reports a failed assertion (exit 3).
    fs::write(&cfg, "n_list = [4, 5, 6, 7]\nquanta = [2]\nengine = \"bosonic\"\n").unwrap();
    let res = run("symflip-scan", &cfg, &out, &[]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(out.join("symflip-scan_summary.json")).unwrap(),
    )
    .unwrap();
    assert!(summary["assertions"]
        .as_array()
        .unwrap()
        .iter()
        .any(|a| a["passed"] == false));
    let _ = fs::remove_dir_all(&out);
}

#[test]
fn every_experiment_runs_on_its_example_config() {
    let root = workspace_root();
    let cases = [
        ("spinflip-scan", "spinflip_scan.toml"),
        ("symflip-scan", "symflip_scan.toml"),
        ("phaseflip-scan", "phaseflip_scan.toml"),
        ("loss-scan", "loss_scan_coherent.toml"),
        ("liouvillian-reduce", "liouvillian_reduce.toml"),
        ("thermal-prep", "thermal_prep.toml"),
        ("adiabatic-transfer", "adiabatic_transfer.toml"),
        ("nonadiabatic-isolation", "nonadiabatic_isolation.toml"),
        ("discrepancy-ledger", "discrepancy_ledger.toml"),
    ];
    for (experiment, cfg) in cases {
        let out = tmp_dir(&format!("all-{experiment}"));
        let res = run(experiment, &root.join("configs").join(cfg), &out, &[]);
        assert!(
            res.status.success(),
            "{experiment}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
        assert!(out
            .join(format!("{experiment}_summary.json"))
            .exists());
        let _ = fs::remove_dir_all(&out);
    }
}
