use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kzsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kzsim"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("spawn kzsim")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn ai_scan_fit_default_grids() {
    let dir = tempfile::tempdir().unwrap();
    for (scheme, lo, hi) in [("A", 1.50, 1.65), ("B", 0.72, 0.82)] {
        let out = kzsim(dir.path(), &["ai", "scan-fit", "--scheme", scheme]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let rec = json(&dir.path().join(format!("ai_fit_{scheme}.json")));
        let alpha = rec["params"]["alpha"].as_f64().unwrap();
        assert!((lo..=hi).contains(&alpha), "scheme {scheme}: alpha {alpha}");
        assert!(rec["stderr"]["alpha"].as_f64().unwrap() >= 0.0);
        assert_eq!(rec["window"]["lo"].as_f64(), Some(0.05));
    }
}

#[test]
fn ai_scan_fit_single_point_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = kzsim(dir.path(), &["ai", "scan-fit", "--tau-ratio", "0.2"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn ai_fit_reads_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("d.csv");
    let alpha = std::f64::consts::FRAC_PI_2;
    let mut text = String::from("# synthetic\nx,y\n");
    for x in [0.05, 0.1, 0.2, 0.4, 0.8] {
        text += &format!("{x},{}\n", kzsim::ai::excitation_ai(kzsim::ai::AiScheme::A, alpha * x));
    }
    std::fs::write(&input, text).unwrap();
    let out = kzsim(dir.path(), &["ai", "fit", "--input", input.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = json(&dir.path().join("ai_fit_A.json"));
    assert!((rec["params"]["alpha"].as_f64().unwrap() - alpha).abs() < 1e-8);
}

#[test]
fn lz_run_lab_units_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "lz", "run", "--rabi-hz", "18.3kHz", "--rate-hz-per-s", "2.0GHz/s", "--start-s=-500us", "--end-s",
        "500us", "--samples", "201",
    ];
    let out = kzsim(dir.path(), &args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("lz_run.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# kzsim "));
    assert!(text.lines().nth(1).unwrap().starts_with("# config "));
    let rows = data_rows(&path);
    assert_eq!(rows.len(), 201);
    let (first, last) = (&rows[0], &rows[200]);
    assert!((first[1] + 500e-6).abs() < 1e-15 && (last[1] - 500e-6).abs() < 1e-15);
    assert!(first[2] < 1e-12);
    // Zener value at the resulting sweep rate
    let delta = 2.0e9 / (std::f64::consts::TAU * 18.3e3 * 18.3e3);
    let zener = kzsim::lz::zener_probability(delta);
    assert!((last[2] - zener).abs() < 2e-2, "{} vs {zener}", last[2]);
}

#[test]
fn lz_run_zero_duration_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = kzsim(dir.path(), &["lz", "run", "--scheme", "B", "--tau-end", "0"]);
    assert_eq!(code(&out), 0);
    assert!(data_rows(&dir.path().join("lz_run.csv")).is_empty());
}

#[test]
fn lz_run_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kzsim(dir.path(), &["lz", "run", "--delta", "-1"])), 2);
    assert_eq!(code(&kzsim(dir.path(), &["lz", "run", "--rate-hz-per-s", "1GHz/s"])), 2);
    assert_eq!(code(&kzsim(dir.path(), &["lz", "run", "--scheme", "B", "--tau-start=-3"])), 2);
    assert_eq!(code(&kzsim(dir.path(), &["lz", "run", "--tol", "0.5"])), 2);
}

#[test]
fn config_file_overlay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"delta": 2.0, "samples": 11}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let out = kzsim(dir.path(), &["lz", "run", "--config", c, "--samples", "3"]);
    assert_eq!(code(&out), 0);
    let path = dir.path().join("lz_run.csv");
    assert_eq!(data_rows(&path).len(), 3);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\"delta\":2.0"));

    std::fs::write(&cfg, r#"{"dleta": 2.0}"#).unwrap();
    assert_eq!(code(&kzsim(dir.path(), &["lz", "run", "--config", c])), 2);
}

#[test]
fn kzm_scan_three_quench_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = kzsim(dir.path(), &["kzm", "scan", "--tau-q", "1.85,0.85,0.35"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let scan = data_rows(&dir.path().join("kzm_scan.csv"));
    assert_eq!(scan.len(), 3);
    assert!(scan[0][1] < scan[1][1] && scan[1][1] < scan[2][1]);
    let modes = data_rows(&dir.path().join("kzm_modes.csv"));
    assert_eq!(modes.len(), 150);
    for (i, s) in scan.iter().enumerate() {
        let mean = modes[50 * i..50 * (i + 1)].iter().map(|r| r[5]).sum::<f64>() / 50.0;
        assert!((mean - s[1]).abs() < 1e-14);
    }
    assert!(dir.path().join("kzm_fit.json").exists());
}

#[test]
fn kzm_fit_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("n.csv");
    std::fs::write(&input, "10,0.1\n20,0.0707106781186548\n40,0.05\n1000,1\n").unwrap();
    let out = kzsim(dir.path(), &["kzm", "fit", "--input", input.to_str().unwrap(), "--fit-window", "5,50"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = json(&dir.path().join("kzm_fit.json"));
    assert!((rec["params"]["beta"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(rec["n_samples"].as_u64(), Some(3));
}

#[test]
fn kzm_scan_is_byte_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["kzm", "scan", "--n-spins", "40", "--grid", "0.5,2,4"];
    assert_eq!(code(&kzsim(a.path(), &[&args[..], &["--threads", "1"]].concat())), 0);
    assert_eq!(code(&kzsim(b.path(), &[&args[..], &["--threads", "3"]].concat())), 0);
    for f in ["kzm_scan.csv", "kzm_modes.csv", "kzm_fit.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn oracle_check_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = kzsim(dir.path(), &["oracle", "check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("oracle_check.csv"));
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[5] <= 1e-3));
}

#[test]
fn oracle_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&kzsim(dir.path(), &["oracle", "check", "--n-spins", "14"])), 2);
    // an impossible threshold forces the disagreement path
    let out = kzsim(dir.path(), &["oracle", "check", "--n-spins", "4", "--tau-q", "1", "--threshold", "0"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn oracle_check_sudden_limit() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["oracle", "check", "--n-spins", "4,6", "--tau-q", "1e-4", "--g-start", "100"];
    assert_eq!(code(&kzsim(dir.path(), &args)), 0);
    for r in data_rows(&dir.path().join("oracle_check.csv")) {
        assert!((r[3] - 0.5).abs() < 1e-2 && (r[4] - 0.5).abs() < 1e-2);
    }
}

#[test]
fn pulse_compile_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let out = kzsim(dir.path(), &["pulse", "compile", "--n-spins", "50", "--tau-q", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let compiled = dir.path().join("pulse_plan.json");
    let rec = json(&compiled);
    assert_eq!(rec["plans"].as_array().unwrap().len(), 25);

    let plan = dir.path().join("plan.json");
    std::fs::write(&plan, r#"{"segments": [{"kind": "rot_x", "angle": 3.141592653589793}]}"#).unwrap();
    let p = plan.to_str().unwrap();
    let out = kzsim(dir.path(), &["pulse", "render", "--plan", p, "--rabi-hz", "20kHz"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("waveform.csv"));
    assert_eq!(rows.len(), 1251);
    for r in rows.iter().step_by(50) {
        let phi = std::f64::consts::TAU * 2e6 * r[0];
        assert!((r[1] - phi.cos()).abs() < 1e-9 && (r[2] - phi.sin()).abs() < 1e-9);
    }

    let bin_a = tempfile::tempdir().unwrap();
    let bin_b = tempfile::tempdir().unwrap();
    let c = compiled.to_str().unwrap();
    for d in [&bin_a, &bin_b] {
        let out = kzsim(d.path(), &["pulse", "render", "--plan", c, "--index", "3", "--format", "bin"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(bin_a.path().join("waveform.bin")).unwrap();
    assert_eq!(&a[..8], b"IQWAVE01");
    assert_eq!(a, std::fs::read(bin_b.path().join("waveform.bin")).unwrap());

    let out = kzsim(dir.path(), &["pulse", "render", "--plan", p, "--sample-rate", "3MS/s"]);
    assert_eq!(code(&out), 2);
    let out = kzsim(dir.path(), &["pulse", "compile"]);
    assert_eq!(code(&out), 2);
}
