use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mupir_cli::Report;
use mupir_core::placement::read_cache_dump;

fn mupir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mupir"))
        .args(args)
        .env_remove("RUST_BACKTRACE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn worked_example(report: &Path) -> Vec<String> {
    [
        "simulate",
        "--caches",
        "5",
        "--access-degree",
        "3",
        "--t",
        "2",
        "--servers",
        "2",
        "--files",
        "3",
        "--seed",
        "7",
        "--report",
        report.to_str().unwrap(),
    ]
    .iter()
    .map(ToString::to_string)
    .collect()
}

#[test]
fn simulate_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let args = worked_example(&path);
    let out = mupir(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report = Report::parse(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report.get("measured_rate"), Some("7/40"));
    assert_eq!(report.get("formula_rate"), Some("7/40"));
    assert_eq!(report.get("subpacketization"), Some("80"));
    assert_eq!(report.get("symbols_per_transmission"), Some("7"));
    assert_eq!(report.get("bytes_per_server"), Some("7,7"));
    assert_eq!(report.get("coding_gain_check"), Some("pass"));
    assert_eq!(report.get("decoded"), Some("10/10"));
}

#[test]
fn reports_are_reproducible_and_configs_replay() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    let cfg = dir.path().join("run.toml");

    let mut args = worked_example(&a);
    args.insert(0, cfg.to_str().unwrap().to_string());
    args.insert(0, "--save-config".to_string());
    let out = mupir(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let toml = fs::read_to_string(&cfg).unwrap();
    assert!(toml.contains("[simulate]"), "{toml}");
    fs::write(&cfg, toml.replace("a.txt", "b.txt")).unwrap();
    let out = mupir(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn parameter_errors_exit_with_code_two() {
    let cases: [(&[&str], &str); 4] = [
        (
            &["simulate", "--caches", "5", "--access-degree", "3", "--t", "1.5", "--servers", "2", "--files", "3"],
            "t = CM/N must be an integer; got 1.5",
        ),
        (
            &["simulate", "--caches", "5", "--access-degree", "3", "--t", "3", "--servers", "2", "--files", "3"],
            "t + L must not exceed C",
        ),
        (
            &["simulate", "--caches", "5", "--access-degree", "3", "--t", "2", "--servers", "1", "--files", "3"],
            "S",
        ),
        (
            &["simulate", "--caches", "3", "--access-degree", "1", "--t", "1", "--servers", "2", "--files", "2", "--demands", "1,2"],
            "demands",
        ),
    ];
    for (args, needle) in cases {
        let out = mupir(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(mupir(&[]).status.code(), Some(2));
}

#[test]
fn cyc_prints_the_count() {
    let out = mupir(&["cyc", "--n", "8", "--k", "4", "--m", "2", "--oracle"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("cyc(8, 4, 2) = 68\n"), "{text}");
    assert!(text.contains("match = true"));
    let out = mupir(&["cyc", "--n", "8", "--k", "5", "--m", "2"]);
    assert!(stdout(&out).contains("= 56"));
    let out = mupir(&["cyc", "--n", "3", "--k", "4", "--m", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cyclic_simulation_reports_the_plan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    let out = mupir(&[
        "simulate", "--caches", "8", "--access-degree", "2", "--t", "3", "--servers", "2",
        "--files", "3", "--access", "cyclic", "--report", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = Report::parse(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r.get("plan_mode"), Some("multiaccess-cyclic"));
    assert_eq!(r.get("family_size"), Some("56"));
    assert_eq!(r.get("per_user_rate"), Some("7/32"));
    assert_eq!(r.get("rate_match"), Some("true"));
}

#[test]
fn cache_dumps_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = mupir(&[
        "simulate", "--caches", "4", "--access-degree", "2", "--t", "1", "--servers", "2",
        "--files", "2", "--dump-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for c in 1..=4 {
        let (header, body) = read_cache_dump(&dir.path().join(format!("cache_{c}.bin"))).unwrap();
        assert_eq!(header.cache_index, c);
        assert_eq!(header.entries, 2);
        assert_eq!(body.len() as u64, header.body_bytes);
    }
}

#[test]
fn privacy_audit_modes() {
    let out = mupir(&["privacy-audit", "--mode", "exact"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict = PASS"));
    assert!(stdout(&out).contains("max_tv_distance = 0"));

    let out = mupir(&[
        "privacy-audit", "--mode", "exact", "--files", "3", "--caches", "5", "--access-degree", "3",
        "--t", "2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("statistical"));

    let out = mupir(&[
        "privacy-audit", "--mode", "statistical", "--files", "3", "--caches", "4", "--access-degree",
        "2", "--t", "1", "--samples", "200",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("verdict = PASS"));

    let out = mupir(&["privacy-audit", "--mode", "statistical", "--samples", "2"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn rates_and_compare() {
    let out = mupir(&[
        "rates", "--mode", "theorem1", "--caches", "5", "--access-degree", "3", "--t", "2",
        "--servers", "2", "--files", "3",
    ]);
    assert!(stdout(&out).contains("rate = 7/40\n"), "{}", stdout(&out));
    let out = mupir(&["rates", "--mode", "product", "--users", "8", "--t", "2", "--files", "3"]);
    assert!(stdout(&out).contains("per_user_rate = 7/16\n"));
    let out = mupir(&[
        "rates", "--mode", "ratio", "--caches", "6", "--access-degree", "2", "--t", "1",
        "--servers", "3", "--files", "4",
    ]);
    assert!(stdout(&out).contains("rate = 40/27\n"));

    let dir = tempfile::tempdir().unwrap();
    for s in 1..=4 {
        let out = mupir(&[
            "compare", "--scenario", &s.to_string(), "--caches", "8", "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let csv = fs::read_to_string(dir.path().join(format!("scenario_{s}.csv"))).unwrap();
        assert!(csv.starts_with("scenario,C,L,"));
    }
    assert_eq!(mupir(&["compare", "--scenario", "5", "--caches", "8"]).status.code(), Some(2));
}

#[test]
fn pir_demo_decodes() {
    let out = mupir(&["pir-demo", "--servers", "3", "--files", "2", "--desired", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("decoded = ok"));
    assert!(stdout(&out).contains("download per desired symbol = 4/3"));
}

#[test]
fn every_subcommand_has_help() {
    for (cmd, needle) in [
        ("simulate", "multi-access coded caching"),
        ("pir-demo", "capacity-achieving"),
        ("cyc", "consecutive"),
        ("privacy-audit", "demand vector"),
        ("rates", "order-optimality"),
        ("compare", "dedicated-cache"),
    ] {
        let out = mupir(&[cmd, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        assert!(stdout(&out).contains(needle), "{cmd}: {}", stdout(&out));
    }
}
