use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nlfe::harness::config::{parse, MetricsConfig, SolveConfig, SweepConfig};

fn nlfe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlfe"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NLFE_OUT_DIR")
        .output()
        .expect("binary runs")
}

const BAR: &str = r#"
[problem]
family = "bar1d"

[material]
model = "veronda_westmann"
a = 1.0
b = 100.0
k = 1.0

[loads]
steps = [1e-4, 5.0]

[solver]
formulation = "FORM"
"#;

const SWEEP: &str = r#"
[problem]
family = "axisymmetric"
direction = "compression"

[material]
model = "mooney_rivlin"
nonlinearity = [0.0, 1.0]
bulk_ratio = [10.0]

[loads]
f1 = [1e-4]
f2 = { from = 1.0, to = 30.0, per_decade = 4 }

[sweep]
formulations = ["identity", "arctan"]
"#;

#[test]
fn solve_reports_convergence_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bar.toml");
    fs::write(&cfg, BAR.replace("FORM", "log")).unwrap();
    let run = nlfe(&["solve", cfg.to_str().unwrap()], dir.path());
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("converged=true"), "{stdout}");
    assert!(dir.path().join("report.csv").exists());

    fs::write(&cfg, BAR.replace("FORM", "identity")).unwrap();
    let run = nlfe(&["solve", cfg.to_str().unwrap()], dir.path());
    assert!(run.status.success(), "non-convergence is not an error");
    assert!(String::from_utf8(run.stdout).unwrap().contains("converged=false"));
}

#[test]
fn malformed_config_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[problem]\nfamily = \"bar1d\"\n[material\n").unwrap();
    let run = nlfe(&["solve", cfg.to_str().unwrap()], dir.path());
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let run = nlfe(&["sweep", "/nonexistent/sweep.toml"], dir.path());
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn sweep_output_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(&cfg, SWEEP).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(nlfe(&["sweep", cfg.to_str().unwrap(), "--jobs", "1"], &a).status.success());
    assert!(nlfe(&["sweep", cfg.to_str().unwrap(), "--jobs", "3"], &b).status.success());
    let first = fs::read(a.join("sweep.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("sweep.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    // 2 formulations × 2 υ × 7 loads, plus the header.
    assert_eq!(text.lines().count(), 29);
    assert!(text.contains("100+"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bar.toml");
    fs::write(&cfg, BAR.replace("FORM", "log")).unwrap();
    let target = dir.path().join("from_env");
    let run = Command::new(env!("CARGO_BIN_EXE_nlfe"))
        .args(["solve", cfg.to_str().unwrap()])
        .env("NLFE_OUT_DIR", &target)
        .output()
        .unwrap();
    assert!(run.status.success());
    assert!(target.join("report.csv").exists());
}

#[test]
fn seeded_figure_configs_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    let run = nlfe(&["--seed-figures"], dir.path());
    assert!(run.status.success());
    let figures = dir.path().join("figures");
    let mut count = 0;
    for entry in fs::read_dir(&figures).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        let name = path.display().to_string();
        count += 1;
        if text.contains("[sweep]") {
            let cfg: SweepConfig = parse(&text, &name).unwrap();
            cfg.validate().unwrap();
            let m = cfg.material.material(cfg.material.nonlinearity[0], cfg.material.bulk_ratio[0]).unwrap();
            cfg.problem.build(m).unwrap();
        } else if text.contains("[[curve]]") || text.contains("[[region]]") {
            let cfg: MetricsConfig = parse(&text, &name).unwrap();
            cfg.validate().unwrap();
        } else {
            let cfg: SolveConfig = parse(&text, &name).unwrap();
            cfg.schedule().unwrap();
            cfg.problem.build(cfg.material.material().unwrap()).unwrap();
        }
    }
    assert_eq!(count, 19);
}

#[test]
fn metrics_verb_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.toml");
    fs::write(
        &cfg,
        "[[curve]]\nname = \"nh\"\nfunction = { kind = \"neo_hookean\", measure = \"cauchy\" }\n\
         transform = { kind = \"arctan\" }\nx = { from = 0.1, to = 1.0, points = 10 }\n",
    )
    .unwrap();
    let run = nlfe(&["metrics", cfg.to_str().unwrap()], dir.path());
    assert!(run.status.success());
    let csv = fs::read_to_string(dir.path().join("nh_curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}
