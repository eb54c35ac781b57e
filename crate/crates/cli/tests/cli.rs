use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const ELLIPSE: &str = "ellipse:a=0.5,gamma=1";
const POWERLAW4: &str = "powerlaw:c=0.2,beta=4,L=64,gamma=1";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npgrunsky"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn report_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("missing `{key}` in:\n{text}"))
        .to_string()
}

fn manifest(path: &Path) -> serde_json::Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(name).unwrap()).unwrap()
}

#[test]
fn spectrum_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = run(&["spectrum", "--preset", ELLIPSE, "-N", "20", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "k,lambda,abs_lambda");
    assert_eq!(rows.len(), 41);
    let lambda = |i: usize| rows[i].split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert_eq!(lambda(1), 0.25);
    assert_eq!(lambda(2), -0.25);

    let m = manifest(&out);
    assert_eq!(m["subcommand"], "spectrum");
    assert_eq!(m["params"]["command"]["spectrum"]["n"], 20);
    assert_eq!(m["domain_digest"].as_str().unwrap().len(), 64);
    assert!(m["timestamp"].as_u64().unwrap() > 0);
}

#[test]
fn domain_file_and_preset_share_digest() {
    let dir = tempfile::tempdir().unwrap();
    let domain = dir.path().join("ellipse.json");
    fs::write(&domain, r#"{"gamma": 1, "a0": [0, 0], "a": [[0.5, 0]]}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(run(&["spectrum", "--domain", domain.to_str().unwrap(), "-N", "8", "--out", a.to_str().unwrap()])
        .status
        .success());
    assert!(run(&["spectrum", "--preset", ELLIPSE, "-N", "8", "--out", b.to_str().unwrap()])
        .status
        .success());
    assert_eq!(manifest(&a)["domain_digest"], manifest(&b)["domain_digest"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["spectrum", "--preset", POWERLAW4, "-N", "64"],
        &["oracle", "--preset", POWERLAW4, "-n", "256", "--count", "10"],
        &["grunsky", "--preset", POWERLAW4, "-N", "16", "--method", "composition"],
        &["potential", "--preset", ELLIPSE, "-m", "2", "--grid", "16"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let paths: Vec<_> = (0..2).map(|r| dir.path().join(format!("{i}-{r}.csv"))).collect();
        for p in &paths {
            let mut full = args.to_vec();
            full.extend(["--out", p.to_str().unwrap()]);
            assert!(run(&full).status.success(), "{args:?}");
        }
        assert_eq!(fs::read(&paths[0]).unwrap(), fs::read(&paths[1]).unwrap(), "{args:?}");
    }
}

#[test]
fn validate_disk_passes() {
    let o = run(&["validate", "--preset", "disk"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(report_value(&text, "status"), "PASS");
    assert_eq!(report_value(&text, "note"), "all-zero spectrum");
}

#[test]
fn validate_ignores_tol_scale() {
    let o = run(&["validate", "--preset", ELLIPSE, "--tol-scale", "1e-30"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn compare_powerlaw_agrees() {
    let o = run(&["compare", "--preset", POWERLAW4, "-N", "64", "-n", "512", "--count", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let dev: f64 = report_value(&text, "max_abs_deviation").parse().unwrap();
    assert!(dev <= 1e-6);
    assert_eq!(report_value(&text, "status"), "PASS");
}

#[test]
fn validate_jump_reports_first_order_continuity() {
    let o = run(&["validate-jump", "--preset", ELLIPSE, "-m", "2"]);
    assert!(o.status.success());
    let ratio: f64 = report_value(&stdout(&o), "richardson_ratio").parse().unwrap();
    assert!((1.7..=2.3).contains(&ratio));
}

#[test]
fn decay_and_tailnorm_outputs() {
    let o = run(&["decay", "--preset", ELLIPSE, "-N", "20", "--model", "exp", "--range", "1,20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "k,abs_lambda_2k,fitted,bound");
    assert_eq!(text.lines().count(), 21);

    let o = run(&["tailnorm", "--preset", ELLIPSE, "-N", "20", "--cuts", "3"]);
    let text = stdout(&o);
    let tail: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((tail - 0.03125).abs() < 1e-15);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"gamma": 1, "a": [[2.0, 0]]}"#).unwrap();
    let junk = dir.path().join("junk.json");
    fs::write(&junk, "not json").unwrap();

    let code = |args: &[&str]| run(args).status.code();
    assert_eq!(code(&["spectrum", "--preset", ELLIPSE, "-N", "x"]), Some(2));
    assert_eq!(code(&["spectrum"]), Some(2));
    assert_eq!(code(&["frobnicate", "--preset", ELLIPSE]), Some(3));
    assert_eq!(code(&["spectrum", "--preset", "circle"]), Some(4));
    assert_eq!(code(&["spectrum", "--domain", bad.to_str().unwrap()]), Some(4));
    assert_eq!(code(&["spectrum", "--domain", junk.to_str().unwrap()]), Some(4));
    assert_eq!(
        code(&["validate-jump", "--preset", ELLIPSE, "-m", "1", "--tol", "1e-30"]),
        Some(5)
    );
    assert_eq!(code(&["decay", "--preset", "disk"]), Some(6));
    assert_eq!(code(&["spectrum", "--domain", "/nonexistent/domain.json"]), Some(7));
    let unwritable = dir.path().join("missing-dir").join("s.csv");
    assert_eq!(
        code(&["spectrum", "--preset", ELLIPSE, "--out", unwritable.to_str().unwrap()]),
        Some(7)
    );
}
