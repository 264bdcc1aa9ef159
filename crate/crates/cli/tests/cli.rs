use std::path::{Path, PathBuf};
use std::process::Command;

use fraclab_cli::config::Level;
use fraclab_cli::report::fully_tagged;
use fraclab_cli::{run_config, verify_suite, VerifyOptions};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fraclab"));
    c.env_remove("FRACLAB_THREADS").env_remove("FRACLAB_DETERMINISTIC");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn order_out_of_range_exits_3_with_reason() {
    let out = tempfile::tempdir().unwrap();
    let st = bin()
        .arg("run")
        .arg(configs().join("bad_order.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
    let r = read_report(out.path());
    assert_eq!(r["status"], "error");
    let reason = r["reason"].as_str().unwrap();
    assert!(reason.contains("s must be < min(1, n/2)"), "{reason}");
    assert!(!reason.contains('\n'));
    assert!(!out.path().join("trace.csv").exists());
}

#[test]
fn constant_reconstruction_passes() {
    let out = tempfile::tempdir().unwrap();
    let st = bin()
        .arg("run")
        .arg(configs().join("reconstruct_constant.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let r = read_report(out.path());
    let err = r["results"]["points"][0]["relative_error"]["value"].as_f64().unwrap();
    assert!(err <= 1e-6, "{err}");
    assert!(fully_tagged(&r));
    assert_eq!(r["results"]["points"][0]["truth"]["provenance"], "config");
    let trace = std::fs::read_to_string(out.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("x0,N,E_phi,E_u,dn_pairing,abs_err\n"));
    assert_eq!(trace.lines().count(), 4);
    let svg = std::fs::read_to_string(out.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            "typo.toml",
            "experiment = \"poincare\"\ngrid = { n = 1, L = 16.0, m = 64 }\nsamplse = 3\n",
        ),
        ("syntax.toml", "experiment = \n"),
        ("kind.toml", "experiment = \"nonsense\"\n"),
        (
            "missing.toml",
            "experiment = \"poincare\"\ngrid = { n = 1, L = 16.0, m = 64 }\ns = 0.25\n",
        ),
    ];
    for (name, text) in cases {
        let p = write_config(dir.path(), name, text);
        let s = run_config(&p, None);
        assert_eq!(s.exit_code, 2, "{name}");
        let r = read_report(&s.outdir);
        assert!(r["reason"].as_str().unwrap().starts_with("config:parse:"), "{name}");
    }
    let st = bin().arg("run").arg(dir.path().join("absent.toml")).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn precondition_and_criteria_failures() {
    let dir = tempfile::tempdir().unwrap();
    // N = 64 breaks the resolution cap at m = 256
    let p = write_config(
        dir.path(),
        "cap.toml",
        r#"
experiment = "reconstruct"
grid = { n = 1, L = 16.0, m = 256 }
s = 0.25
omega = [[-2.0, 2.0]]
window = [[3.0, 7.0]]
conductivity = [{ constant = 1.0 }]
x0 = [[5.0]]
N_list = [1, 64]
"#,
    );
    let s = run_config(&p, None);
    assert_eq!(s.exit_code, 3);
    assert!(
        s.report["reason"]
            .as_str()
            .unwrap()
            .starts_with("precondition:unresolved"),
        "{}",
        s.report["reason"]
    );
    // an impossible tolerance fails the criterion and names it
    let p = write_config(
        dir.path(),
        "strict.toml",
        r#"
experiment = "reconstruct"
grid = { n = 1, L = 16.0, m = 256 }
s = 0.25
omega = [[-2.0, 2.0]]
window = [[3.0, 7.0]]
conductivity = [{ constant = 1.0 }, { bump = { center = [5.0], radius = 1.5, amplitude = 0.8 } }]
x0 = [[5.75]]
N_list = [1, 2]
tolerances = { relative_error = 1e-9 }
plot = false
"#,
    );
    let s = run_config(&p, None);
    assert_eq!(s.exit_code, 1);
    assert_eq!(s.report["status"], "fail");
    assert!(s.report["reason"]
        .as_str()
        .unwrap()
        .contains("relative_error[x0=5.75e0]"));
    assert!(!s.outdir.join("plot.svg").exists());
}

#[test]
fn every_number_carries_provenance() {
    let out = tempfile::tempdir().unwrap();
    for name in ["invariance", "poincare", "solve", "stability"] {
        let dir = out.path().join(name);
        let s = run_config(&configs().join(format!("{name}.toml")), Some(&dir));
        assert_eq!(s.exit_code, 0, "{name}: {}", s.report["reason"]);
        let r = read_report(&dir);
        assert!(fully_tagged(&r), "{name}");
        assert_eq!(r["config"]["s"]["provenance"], "config");
        assert!(r["criteria"]
            .as_array()
            .unwrap()
            .iter()
            .all(|c| c["measured"]["provenance"] == "computed"));
    }
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let out = tempfile::tempdir().unwrap();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let st = bin()
            .env("FRACLAB_THREADS", threads)
            .arg("run")
            .arg(configs().join("stability.toml"))
            .arg("--out")
            .arg(dir)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    for f in ["report.json", "trace.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(read_report(&a).get("elapsed_seconds").is_none());
}

#[test]
fn nondeterministic_runs_record_timing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_config(
        dir.path(),
        "p.toml",
        "experiment = \"poincare\"\ngrid = { n = 1, L = 16.0, m = 128 }\ns = 0.25\nomega = [[-2.0, 2.0]]\ndeterministic = false\n",
    );
    let s = run_config(&p, None);
    assert!(s.report["elapsed_seconds"]["value"].as_f64().is_some());
}

#[test]
fn concurrent_configs_keep_separate_outputs() {
    let out = tempfile::tempdir().unwrap();
    let st = bin()
        .arg("run")
        .arg(configs().join("poincare.toml"))
        .arg(configs().join("bad_order.toml"))
        .arg("--out")
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(3));
    assert_eq!(read_report(&out.path().join("poincare"))["status"], "pass");
    assert_eq!(read_report(&out.path().join("bad_order"))["status"], "error");
}

#[test]
fn report_command_pretty_prints() {
    let out = tempfile::tempdir().unwrap();
    run_config(&configs().join("invariance.toml"), Some(out.path()));
    let o = bin().arg("report").arg(out.path()).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.contains("experiment: invariance") && text.contains("[PASS] discrepancy_perturbed"),
        "{text}"
    );
    assert_eq!(
        bin()
            .arg("report")
            .arg(out.path().join("nope"))
            .status()
            .unwrap()
            .code(),
        Some(5)
    );
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let st = bin()
        .env("FRACLAB_THREADS", "zero")
        .arg("report")
        .arg(".")
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn fast_suite_passes_and_mutation_is_caught() {
    let clean = verify_suite(Level::Fast, VerifyOptions::default());
    let failing: Vec<&str> = clean.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert!(failing.is_empty(), "{failing:?}");
    let mutated = verify_suite(Level::Fast, VerifyOptions { cns_factor: 1.1 });
    let failing: Vec<&str> = mutated.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert!(failing.contains(&"operators.gagliardo_vs_spectral"), "{failing:?}");
    assert!(failing.contains(&"operators.spectral_vs_sum"), "{failing:?}");
}

#[test]
fn verify_command_names_failing_invariants() {
    let o = bin().args(["verify", "--cns-factor", "1.1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("failed invariant operators.gagliardo_vs_spectral"),
        "{err}"
    );
}
