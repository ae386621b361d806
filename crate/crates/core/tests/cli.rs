use std::path::Path;
use std::process::{Command, Output};

fn spde_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spde-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("SPDE_LAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: [&str; 6] = ["--N", "32", "--samples", "10", "--jobs", "1"];

#[test]
fn help_lists_flags_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde_lab(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("census"));
    let o = spde_lab(&["convergence", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    for flag in [
        "--g",
        "--lambda",
        "--d",
        "--N",
        "--T",
        "--tau",
        "--levels",
        "--ref-level",
        "--samples",
        "--seed",
        "--integrators",
        "--out",
        "--jobs",
        "--config",
    ] {
        assert!(stdout(&o).contains(flag), "{flag} missing");
    }
}

#[test]
fn selftest_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde_lab(&["selftest"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

#[test]
fn census_prints_table_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["census", "--out", "c.csv"];
    args.extend(SMALL);
    let o = spde_lab(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("10/10"));
    assert!(dir.path().join("c.csv").exists());
    assert!(dir.path().join("c.summary.txt").exists());
}

#[test]
fn same_argv_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let mut args = vec!["census", "--seed", "5", "--out", name];
        args.extend(SMALL);
        assert_eq!(spde_lab(&args, dir.path()).status.code(), Some(0));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_output_directory_exits_one_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["census", "--out", "missing/dir/c.csv"];
    args.extend(SMALL);
    let o = spde_lab(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing/dir/c.csv"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["census", "--tau", "0.1"][..],
        &["census", "--g", "cubic"],
        &["convergence", "--levels", "3..20"],
        &["census", "--unknown"],
        &[],
    ] {
        let o = spde_lab(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "# small census\ng = rational\nsamples = 4\nN = 16\nseed = 3\nout = from-config.csv\n",
    )
    .unwrap();
    let o = spde_lab(
        &["census", "--config", "run.cfg", "--samples", "6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("from-config.csv")).unwrap();
    assert!(csv.contains("# seed: 3"));
    assert!(csv.contains("LT,rational,2.5,1,16,0.03125,6,6,0"), "{csv}");

    std::fs::write(dir.path().join("bad.cfg"), "colour = blue\n").unwrap();
    let o = spde_lab(&["census", "--config", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["census", "--out", "e.csv"];
    args.extend(SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_spde-lab"))
        .args(&args)
        .current_dir(dir.path())
        .env("SPDE_LAB_SEED", "1234")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert!(csv.contains("# seed: 1234"));
}

#[test]
fn convergence_with_exact_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = spde_lab(
        &[
            "convergence",
            "--g",
            "linear",
            "--reference",
            "exact",
            "--integrators",
            "LT",
            "--levels",
            "3..6",
            "--ref-level",
            "8",
            "--N",
            "32",
            "--samples",
            "5",
            "--out",
            "lin.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("lin.csv")).unwrap();
    for line in csv.lines().filter(|l| l.starts_with("LT,")) {
        let err: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-12, "{line}");
    }
}
