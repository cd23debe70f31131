use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const COMMANDS: [&str; 7] = ["field", "kernel", "norms", "certify", "fall", "dichotomy", "pd"];

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn example() -> PathBuf {
    root().join("configs/example.json")
}

fn cusplab(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cusplab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("WORKERS")
        .output()
        .unwrap()
}

fn report(out: &Path, command: &str) -> Value {
    serde_json::from_slice(&fs::read(out.join(format!("{command}.json"))).unwrap()).unwrap()
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut doc: Value = serde_json::from_slice(&fs::read(example()).unwrap()).unwrap();
    edit(&mut doc);
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn reports_match_their_schemas() {
    let dir = tempfile::tempdir().unwrap();
    for command in COMMANDS {
        let o = cusplab(&[command], &example(), dir.path());
        assert!(o.status.success(), "{command}: {}", stderr(&o));
        let schema: Value = serde_json::from_slice(
            &fs::read(root().join(format!("schemas/v1/{command}.schema.json"))).unwrap(),
        )
        .unwrap();
        let validator = jsonschema::validator_for(&schema).unwrap();
        let doc = report(dir.path(), command);
        let errors: Vec<String> = validator.iter_errors(&doc).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{command}: {errors:?}");
        assert_eq!(doc["schema"], format!("cusplab/{command}/v1"));
        assert_eq!(doc["input_digest"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn stdout_lists_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cusplab(&["kernel"], &example(), dir.path());
    assert!(o.status.success());
    let lines: Vec<String> = String::from_utf8_lossy(&o.stdout).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    assert!(lines.iter().all(|l| Path::new(l).exists()));
    assert!(stderr(&o).contains("finished in"));
}

#[test]
fn negative_radius_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cusplab(&["field", "--override", "geometry.r0=-1"], &example(), &out);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.starts_with("cusplab: error: command=field kind=validation message="), "{err}");
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |d| {
        d["kernel"]["exponent"] = 1.0.into();
    });
    let o = cusplab(&["kernel"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["kernel.p", "kernel.nope=1", "kernel.p=\"x\""] {
        let o = cusplab(&["kernel", "--override", bad], &example(), dir.path());
        assert_eq!(o.status.code(), Some(2), "{bad}: {}", stderr(&o));
    }
}

#[test]
fn unknown_command_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cusplab(&["integrate"], &example(), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_section_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |d| {
        d.as_object_mut().unwrap().remove("pd");
    });
    let o = cusplab(&["pd"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_worker_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for w in ["0", "many"] {
        let o = Command::new(env!("CARGO_BIN_EXE_cusplab"))
            .args(["pd", "--config"])
            .arg(example())
            .arg("--out")
            .arg(dir.path())
            .env("WORKERS", w)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(2), "WORKERS={w}");
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let o = cusplab(&["pd"], &example(), &blocker.join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kind=io"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cusplab(&["pd"], &dir.path().join("absent.json"), dir.path());
    assert!(matches!(o.status.code(), Some(2) | Some(3)));
}

#[test]
fn overrides_change_the_result_and_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cusplab(&["pd"], &example(), &a).status.success());
    assert!(cusplab(&["pd", "--override", "pd.e_init=4"], &example(), &b).status.success());
    let (ra, rb) = (report(&a, "pd"), report(&b, "pd"));
    assert_ne!(ra["input_digest"], rb["input_digest"]);
    assert_ne!(ra["payload"], rb["payload"]);
}

#[test]
fn override_equal_to_config_keeps_the_digest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(cusplab(&["pd"], &example(), &a).status.success());
    assert!(cusplab(&["pd", "--override", "pd.e_init=1.0"], &example(), &b).status.success());
    assert_eq!(fs::read(a.join("pd.json")).unwrap(), fs::read(b.join("pd.json")).unwrap());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        for command in ["field", "fall", "dichotomy"] {
            assert!(cusplab(&[command], &example(), out).status.success());
        }
    }
    for name in ["field.csv", "field.json", "fall.csv", "fall.json", "dichotomy.csv", "dichotomy.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn certify_at_gamma_six() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cusplab(&["certify"], &example(), dir.path()).status.success());
    let cert = &report(dir.path(), "certify")["payload"]["certificate"];
    let alpha_max = cert["alpha_max"].as_f64().unwrap();
    assert!((alpha_max - 1.0 / 3.0).abs() < 1e-15, "{cert}");
}

#[test]
fn kernel_exponent_for_unit_weights() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cusplab(&["kernel"], &example(), dir.path()).status.success());
    let study = &report(dir.path(), "kernel")["payload"];
    assert_eq!(study["verdict"], "DIVERGENT", "{study}");
    let fitted = study["fitted_exponent"].as_f64().unwrap();
    assert!((fitted - 2.0 / 3.0).abs() < 0.05, "{study}");
}

#[test]
fn fall_report_agrees_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cusplab(&["fall"], &example(), dir.path()).status.success());
    let payload = &report(dir.path(), "fall")["payload"];
    let csv = fs::read_to_string(dir.path().join("fall.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,h,hdot"));
    assert_eq!(lines.count() as u64, payload["samples"].as_u64().unwrap());
    // h' = -sqrt(h) from h = 1 reaches zero at t = 2
    assert_eq!(payload["verdict"], "CONTACT");
    assert!((payload["contact_time"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[cfg(unix)]
#[test]
fn reports_are_world_readable() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    assert!(cusplab(&["pd"], &example(), dir.path()).status.success());
    let mode = fs::metadata(dir.path().join("pd.json")).unwrap().permissions().mode();
    assert_eq!(mode & 0o777, 0o644);
}
