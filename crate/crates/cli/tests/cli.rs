use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fsdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fsdr"))
        .args(args)
        .output()
        .expect("run fsdr")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, model: &str, n: &str, pp: &str) {
    let out = fsdr(&["simulate", "--model", model, "--n", n, "--p", pp, "--m", "40", "--seed", "7", "--out", p(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn manifest_value(dir: &Path, key: &str) -> Option<String> {
    fs::read_to_string(dir.join("manifest.txt"))
        .unwrap()
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_string))
}

#[test]
fn simulate_then_fit_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "I-2", "80", "5");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let out = fsdr(&[
            "fit",
            "-x",
            p(&data.join("predictors.csv")),
            "-y",
            p(&data.join("responses.csv")),
            "--method",
            "fsir",
            "--d0",
            "2",
            "--truth",
            p(&data.join("truth.csv")),
            "--out",
            p(&dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let err: f64 = manifest_value(&dir, "projection_distance").unwrap().parse().unwrap();
        assert!((0.0..2.0).contains(&err));
        assert_eq!(manifest_value(&dir, "seed").as_deref(), Some("7"));
        assert_eq!(manifest_value(&dir, "slices").as_deref(), Some("8"));
        for f in ["basis.csv", "eigenvalues.csv", "sufficient_predictors.csv"] {
            let text = fs::read_to_string(dir.join(f)).unwrap();
            assert!(text.contains("# gamma=") && text.contains("# h_schedule=") && text.contains("# seed=7"));
        }
        outputs.push(fs::read(dir.join("basis.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn missing_response_file_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "I-1", "30", "4");
    let out = fsdr(&[
        "fit",
        "-x",
        p(&data.join("predictors.csv")),
        "-y",
        p(&tmp.path().join("absent.csv")),
        "--kind",
        "distribution",
        "--method",
        "fols",
        "--d0",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("read responses"));
}

#[test]
fn sphere_with_gaussian_kernel_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "III-1", "40", "4");
    let (x, y, fit) = (data.join("predictors.csv"), data.join("responses.csv"), tmp.path().join("fit"));
    let base = [
        "fit",
        "-x",
        p(&x),
        "-y",
        p(&y),
        "--method",
        "fols",
        "--d0",
        "1",
        "--kernel",
        "gaussian",
        "--out",
        p(&fit),
    ];
    let out = fsdr(&base);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive definite"));
    let mut allowed = base.to_vec();
    allowed.push("--allow-indefinite");
    assert!(fsdr(&allowed).status.success());
}

#[test]
fn bad_options_exit_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "I-1", "30", "4");
    let x = data.join("predictors.csv");
    let y = data.join("responses.csv");
    let out = fsdr(&["fit", "-x", p(&x), "-y", p(&y), "--method", "sliced", "--d0", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fsdr(&["fit", "-x", p(&x), "-y", p(&y), "--method", "fols", "--d0", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[cli]\nmethd = \"fols\"\n").unwrap();
    let out = fsdr(&["--config", p(&cfg), "fit", "-x", p(&x), "-y", p(&y)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "I-1", "60", "4");
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        format!(
            "[cli]\npredictors = {:?}\nresponses = {:?}\nmethod = \"fsir\"\nd0 = 1\n[inverse_ensemble]\nslices = 3\n",
            p(&data.join("predictors.csv")),
            p(&data.join("responses.csv"))
        ),
    )
    .unwrap();
    let dir = tmp.path().join("fit");
    let out = fsdr(&["--config", p(&cfg), "--threads", "2", "fit", "--slices", "4", "--out", p(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(manifest_value(&dir, "method").as_deref(), Some("fsir"));
    assert_eq!(manifest_value(&dir, "slices").as_deref(), Some("4"));
}

fn scree_values(path: &Path) -> Vec<f64> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn scree_emits_full_spectrum_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    simulate(&data, "I-2", "400", "10");
    let mut runs = Vec::new();
    for k in 0..2 {
        let path = tmp.path().join(format!("scree{k}.csv"));
        let out = fsdr(&[
            "scree",
            "-x",
            p(&data.join("predictors.csv")),
            "-y",
            p(&data.join("responses.csv")),
            "--method",
            "fopg",
            "--out",
            p(&path),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(fs::read(&path).unwrap());
        let eig = scree_values(&path);
        assert_eq!(eig.len(), 10);
        assert!(eig.windows(2).all(|w| w[0] >= w[1]));
        // two directions dominate for a two-dimensional model
        assert!(eig[1] / eig[2] > 3.0, "{eig:?}");
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn spd_and_sphere_files_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for (model, kernel) in [("II-1", "gaussian"), ("III-2", "laplacian")] {
        let data = tmp.path().join(model);
        simulate(&data, model, "50", "5");
        let out = fsdr(&[
            "fit",
            "-x",
            p(&data.join("predictors.csv")),
            "-y",
            p(&data.join("responses.csv")),
            "--method",
            "fols",
            "--d0",
            "1",
            "--kernel",
            kernel,
            "--out",
            p(&tmp.path().join(format!("fit-{model}"))),
        ]);
        assert!(out.status.success(), "{model}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
