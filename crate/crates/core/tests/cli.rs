use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn linkfid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linkfid")).args(args).output().unwrap()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map(|it| it.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn every_bundled_scenario_runs() {
    for entry in fs::read_dir(scenario("")).unwrap() {
        let path = entry.unwrap().path();
        let out = tempfile::tempdir().unwrap();
        let o = linkfid(&["run", path.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
        let names = files(out.path());
        assert!(names.contains(&"summary.txt".to_string()));
        assert!(names.iter().any(|n| n.starts_with("series_") && n.ends_with(".csv")));
    }
}

#[test]
fn dephasing_trace_distance_decays_exponentially() {
    let out = tempfile::tempdir().unwrap();
    let dir = out.path().to_str().unwrap();
    let o = linkfid(&["run", &scenario("evolve_dephasing.toml"), "--out", dir, "--steps", "400"]);
    assert!(o.status.success());
    let csv = fs::read_to_string(out.path().join("series_evolve.csv")).unwrap();
    assert!(!csv.contains('\r'));
    for (t, td) in column(&csv, "t").into_iter().zip(column(&csv, "trace_distance")) {
        assert!((td - (-2.0 * t).exp()).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn malformed_spec_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("bad.toml");
    let out = tmp.path().join("out");
    for text in ["kind = \"evolve\"\n[grid]\nt_end = 1.0\nsteps = 0\n", "kind = \"teleport\"\n", "kind = = 1"] {
        fs::write(&spec, text).unwrap();
        let o = linkfid(&["run", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        assert!(files(&out).is_empty());
    }
}

#[test]
fn missing_spec_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("absent.toml");
    let o = linkfid(&["run", missing.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = linkfid(&["run", &scenario("bench_fvdg.toml"), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn aliases_write_their_series() {
    let cases: [(&[&str], &str); 5] = [
        (&["metrics"], "series_metrics.csv"),
        (&["evolve", "--steps", "100"], "series_evolve.csv"),
        (&["network", "--nodes", "3", "--steps", "100"], "series_network.csv"),
        (&["bench-fvdg", "--points", "11"], "series_bench_fvdg.csv"),
        (&["grape", "--max-iters", "20"], "series_grape_fidelity.csv"),
    ];
    for (args, expected) in cases {
        let out = tempfile::tempdir().unwrap();
        let mut full = args.to_vec();
        full.extend(["--out", out.path().to_str().unwrap()]);
        let o = linkfid(&full);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(files(out.path()).contains(&expected.to_string()), "{args:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let o = linkfid(&["run", &scenario("three_node_epr.toml"), "--out", dir.path().to_str().unwrap(), "--seed", "7"]);
        assert!(o.status.success());
    }
    let names = files(a.path());
    assert_eq!(names, files(b.path()));
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n}");
    }
}
