use std::path::PathBuf;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holonomy-lab"))
        .args(args)
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.toml"))
        .display()
        .to_string()
}

/// Writes `text` to a fresh file under the system temp dir.
fn temp_file(tag: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("holonomy-lab-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(tag);
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_emits_one_json_report() {
    let o = lab(&["run", &scenario("sphere_octant")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let angle = v["outputs"]["holonomy_angle"].as_f64().unwrap();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    assert_eq!(v["kind"], "sphere_transport");
}

#[test]
fn identical_runs_are_byte_identical() {
    let path = scenario("ab_solenoid");
    for format in ["json", "csv"] {
        let a = lab(&["run", &path, "--format", format, "--seed", "9"]);
        let b = lab(&["run", &path, "--format", format, "--seed", "9"]);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn input_errors_exit_2() {
    assert_eq!(lab(&["run", "/definitely/not/here.toml"]).status.code(), Some(2));
    assert_eq!(
        lab(&["run", &scenario("mobius_once"), "--format", "yaml"])
            .status
            .code(),
        Some(2)
    );
    let typo = temp_file(
        "typo.toml",
        "id = \"f\"\nkind = \"foucault\"\n[params]\nlatitude = 0.5\ncolour = 1\n",
    );
    let o = lab(&["run", typo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let broken = temp_file("broken.toml", "id = \"x\"\nkind = = 1\n");
    let o = lab(&["run", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn engine_errors_exit_3() {
    // A one-second loop is far from adiabatic: the state does not return to its ray.
    let fast = temp_file(
        "fast.toml",
        "id = \"fast\"\nkind = \"berry_adiabatic\"\n[params]\ntheta = \"60 deg\"\nperiod = 1.0\npoints = 200\n",
    );
    let o = lab(&["run", fast.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("fast"));
}

#[test]
fn failed_checks_exit_4() {
    let wrong = temp_file(
        "wrong.toml",
        "id = \"wrong\"\nkind = \"classify\"\n[params]\nsubject = \"mobius\"\nexpect = \"curved_geometric\"\n",
    );
    let o = lab(&["run", wrong.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["outputs"]["classification"], "flat_topological");
}

#[test]
fn corpus_runs_clean_to_a_csv_file() {
    let out = std::env::temp_dir().join(format!("holonomy-lab-corpus-{}.csv", std::process::id()));
    let o = lab(&[
        "corpus",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let names = stdout(&lab(&["corpus", "--list"]));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), names.lines().count() + 1);
    assert_eq!(
        String::from_utf8_lossy(&o.stderr)
            .lines()
            .filter(|l| l.starts_with("PASS "))
            .count(),
        names.lines().count()
    );
}

#[test]
fn shown_corpus_entry_runs_from_a_file() {
    let text = stdout(&lab(&["corpus", "--show", "foucault_pole"]));
    let path = temp_file("pole.toml", &text);
    assert_eq!(lab(&["run", path.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(lab(&["corpus", "--show", "nope"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let o = lab(&[
        "sweep",
        &scenario("foucault_paris"),
        "--param",
        "latitude",
        "--grid",
        "-1:1:5",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut rd = text.lines();
    let header: Vec<&str> = rd.next().unwrap().split(',').collect();
    let lat = header.iter().position(|h| *h == "diagnostics.latitude").unwrap();
    let rows: Vec<f64> = rd.map(|l| l.split(',').nth(lat).unwrap().parse().unwrap()).collect();
    assert_eq!(rows, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);

    let o = lab(&[
        "sweep",
        &scenario("berry_cone_60"),
        "--param",
        "theta",
        "--values",
        "0.5,1.0",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);

    let o = lab(&[
        "sweep",
        &scenario("foucault_paris"),
        "--param",
        "latitude",
        "--values",
        "0.2,9",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
