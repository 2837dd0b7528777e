use std::path::Path;
use std::process::{Command, Output};

fn episcale(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_episcale"))
        .args(args)
        .env_remove("EPISCALE_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn list_scenarios_names_all_eight() {
    let out = episcale(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "sir_comparison",
        "sir_comparison_gaussian",
        "direct_link",
        "mobility_link",
        "inhomogeneous",
        "epidemic_threshold",
        "chaos_rate",
        "solver_xval",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "missing {name}");
    }
}

#[test]
fn run_writes_artifacts_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "inh.cfg",
        "scenario = inhomogeneous\nt_end = 0.5\nsnapshot_times = [0, 0.5]\n",
    );
    let out_dir = dir.path().join("out");
    let out = episcale(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["compartments.csv", "compartments.svg", "report.txt"] {
        assert!(out_dir.join(f).is_file(), "missing {f}");
    }
    let report = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(report.contains("seed: 3") || report.contains("seed = 3"), "{report}");
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "chaos.cfg",
        "scenario = chaos_rate\nn_list = [20, 40, 80]\nn_realizations = 3\nt_end = 0.3\nn_cells = 100\n",
    );
    let mut csv = Vec::new();
    for threads in ["1", "3"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = episcale(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv.push(std::fs::read(out_dir.join("chaos_rate.csv")).unwrap());
    }
    assert_eq!(csv[0], csv[1]);
}

#[test]
fn validate_accepts_good_and_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.cfg", "# defaults\nscenario = direct_link\n");
    let out = episcale(&["validate", &good]);
    assert!(out.status.success());

    let bad = write_config(dir.path(), "bad.cfg", "scenario = sir_comparison\nn_agents = -4\nfoo = 1\n");
    let out = episcale(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n_agents"), "{err}");
    assert!(err.contains("foo"), "{err}");
}

#[test]
fn unstable_step_is_a_user_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dt.cfg", "scenario = inhomogeneous\ndt = 5\nt_end = 10\n");
    let out_dir = dir.path().join("out");
    let out = episcale(&["run", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_exits_with_two() {
    let out = episcale(&["validate", "/nonexistent/episcale.cfg"]);
    assert_eq!(out.status.code(), Some(2));
}
