use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kerr_qnn::output::{read_result, read_wigner_csv, Manifest};

fn qnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qnn"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("qnn runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_XOR: &str = r#"
task = "xor"
seed = 3

[physics]
n_modes = 4
onsite = 1.0
tau = 1.0
coupling = { bonds = [1.0, 0.7, 1.3] }

[basis]
dim = 3

[evolution]
dt = 0.01

[xor]
encoding = "pump_amplitude"
input_level = 0.5
"#;

const SMALL_SWEEP: &str = r#"
task = "sweep_xor"
seed = 11

[physics]
n_modes = 4
tau = 1.0
coupling = { random = { j_max = 1.5 } }

[basis]
mode_dims = [3, 3, 3, 3]
total_cap = 2

[evolution]
dt = 0.01

[xor]
encoding = "occupation"
input_level = 0.5
noise = { samples = 5 }
eval_draws = 6

[sweep]
alpha_values = [2.0, 0.0, "infinite"]
seeds = [1, 2]
"#;

const SMALL_CAT: &str = r#"
task = "cat"
seed = 5

[physics]
n_modes = 2
kerr = 2.0
tau = 0.2
coupling = { bonds = [0.5] }

[basis]
mode_dims = [8, 8]
total_cap = 7

[evolution]
dt = 0.005

[cat]
beta_list = [1.0, 0.8]
grid = { x_min = -5.0, x_max = 5.0, p_min = -5.0, p_max = 5.0, nx = 41, np = 41 }
optimizer = { max_iterations = 15 }
"#;

#[test]
fn validate_accepts_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let o = qnn(&["validate", p.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
        n += 1;
    }
    assert!(n >= 2);
}

#[test]
fn negative_gamma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL_XOR.replace("tau = 1.0", "tau = 1.0\ngamma = -1.0"));
    for cmd in ["validate", "run"] {
        let o = qnn(&[cmd, cfg.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("physics.gamma"), "{}", stderr(&o));
    }
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SMALL_XOR.replace("dim = 3", "dim = 3\ncutoff = 4"));
    let o = qnn(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("cutoff") && msg.contains("line"), "{msg}");

    let json = write(dir.path(), "bad.json", r#"{"task": "xor", "physics": {"n_modes": 1, "tau": 1, "coupling": {"bonds": []}, "spin": 1}}"#);
    let msg = stderr(&qnn(&["validate", json.to_str().unwrap()]));
    assert!(msg.contains("spin") && msg.contains("line 1"), "{msg}");
}

#[test]
fn unstable_integration_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_XOR
        .replace("bonds = [1.0, 0.7, 1.3]", "bonds = [40.0, 40.0, 40.0]")
        .replace("dt = 0.01", "dt = 0.5");
    let cfg = write(dir.path(), "c.toml", &text);
    let o = qnn(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("o/result.json").exists());
}

#[test]
fn xor_run_is_reproducible_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "xor.toml", SMALL_XOR);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for out in [&a, &b] {
        let o = qnn(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ra = std::fs::read(a.join("result.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("result.json")).unwrap());

    let manifest: Manifest = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 3);
    assert_eq!(manifest.config_sha256, kerr_qnn::output::sha256_hex(SMALL_XOR.as_bytes()));
    assert_eq!(manifest.files, vec!["result.json"]);

    let o = qnn(&["run", a.join("manifest.json").to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(ra, std::fs::read(c.join("result.json")).unwrap());

    let result = read_result(&a.join("result.json")).unwrap();
    let xor = result.xor.unwrap();
    assert_eq!(xor.features.len(), 4);
    assert!(xor.draw_errors.is_empty());
}

#[test]
fn sweep_is_independent_of_jobs_and_feeds_figure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.toml", SMALL_SWEEP);
    let one = dir.path().join("one");
    let two = dir.path().join("two");
    for (out, jobs) in [(&one, "1"), (&two, "2")] {
        let o = qnn(&["run", cfg.to_str().unwrap(), "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["result.json", "sweep.csv"] {
        assert_eq!(std::fs::read(one.join(f)).unwrap(), std::fs::read(two.join(f)).unwrap(), "{f}");
    }
    let table = std::fs::read_to_string(one.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "alpha,error_mean,error_std,probability_mean");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,") && lines[2].starts_with("2,") && lines[3].starts_with("inf,"));

    let result_path = one.join("result.json");
    let o = qnn(&["emit-figure", "fig1c", result_path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let fig = String::from_utf8(o.stdout).unwrap();
    let rows = read_result(&result_path).unwrap().sweep.unwrap();
    let mut lines = fig.lines();
    assert_eq!(lines.next(), Some("alpha,error_mean,error_std"));
    for (line, row) in lines.zip(&rows) {
        let cols: Vec<&str> = line.split(',').collect();
        // 2 seeds x 6 evaluation draws per Kerr strength
        assert_eq!(row.errors.len(), 12);
        let mean = row.errors.iter().sum::<f64>() / row.errors.len() as f64;
        assert!((cols[1].parse::<f64>().unwrap() - mean).abs() < 1e-12);
    }

    let o = qnn(&["emit-figure", "fig4", result_path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = qnn(&["emit-figure", "fig1c", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cat_run_writes_wigner_grids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cat.json", &{
        let v: toml::Value = toml::from_str(SMALL_CAT).unwrap();
        serde_json::to_string_pretty(&v).unwrap()
    });
    let out = dir.path().join("out");
    let o = qnn(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let result = read_result(&out.join("result.json")).unwrap();
    let cat = result.cat.unwrap();
    assert_eq!(cat.cases.len(), 2);
    for (i, case) in cat.cases.iter().enumerate() {
        let suffix = if i == 0 { String::new() } else { format!("_{i}") };
        let target = read_wigner_csv(&out.join(format!("wigner_target{suffix}.csv"))).unwrap();
        let output = read_wigner_csv(&out.join(format!("wigner_output{suffix}.csv"))).unwrap();
        assert_eq!(target.len(), 41 * 41);
        assert_eq!(output.len(), 41 * 41);
        assert_eq!(target[0].0, -5.0);
        assert_eq!(target[0].1, -5.0);
        // error recomputed from the exported grids
        let (mut num, mut den) = (0.0, 0.0);
        for (t, o) in target.iter().zip(&output) {
            num += (o.2 - t.2).powi(2);
            den += (o.2 + t.2).powi(2);
        }
        assert!((num / den - case.delta).abs() < 1e-9, "{} vs {}", num / den, case.delta);
    }
}

#[test]
fn schema_matches_docs() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/config.schema.json");
    let o = qnn(&["schema"]);
    assert!(o.status.success());
    let published = std::fs::read_to_string(&docs).unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap(), published, "regenerate with `qnn schema`");
}
