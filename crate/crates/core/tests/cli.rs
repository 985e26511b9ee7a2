//! Exit codes and reproducibility of the `hmfm` binary.

use std::path::Path;
use std::process::{Command, Output};

use hmfm::HmfmError;

fn hmfm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmfm")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(hmfm(&[]).status.code(), Some(2));
    assert_eq!(hmfm(&["fit"]).status.code(), Some(2));
    assert_eq!(hmfm(&["prior", "kprior", "--n", "1,1", "--lambda", "-1", "--gamma", "1,1"]).status.code(), Some(2));
    assert_eq!(hmfm(&["elicit", "--lambda0", "5", "--vlambda", "0", "--gamma0", "0.5", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn bad_data_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.csv");
    assert_eq!(hmfm(&["fit", "--data", path(&missing)]).status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "group,obs,y\n1,1,0.5\n1,2,oops\n").unwrap();
    let out = hmfm(&["fit", "--data", path(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bad_config_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    std::fs::write(&data, "group,obs,y\n1,1,0.5\n2,1,1.5\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "iterations = 10\nno_such_key = 1\n").unwrap();
    assert_eq!(hmfm(&["fit", "--data", path(&data), "--config", path(&cfg)]).status.code(), Some(2));
}

#[test]
fn numerical_failures_map_to_4() {
    let e = HmfmError::Numerical("non-finite weight".into());
    assert_eq!(e.exit_code(), 4);
    let wrapped = HmfmError::Iteration { iteration: 7, source: Box::new(e) };
    assert_eq!(wrapped.exit_code(), 4);
    assert_eq!(HmfmError::SeriesCap { cap: 10 }.exit_code(), 4);
}

#[test]
fn kprior_prints_the_pmf() {
    let out = hmfm(&["prior", "kprior", "--n", "1,1", "--lambda", "1", "--gamma", "1,1"]);
    assert!(out.status.success());
    let lines: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines, ["1,0.632121", "2,0.367879"]);
}

#[test]
fn fit_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert!(hmfm(&["simulate", "--experiment", "2", "--n", "50", "--seed", "3", "--out", path(&sim)]).status.success());
    let data = sim.join("data.csv");
    for algo in ["conditional", "marginal"] {
        let runs: Vec<_> = ["a", "b"]
            .iter()
            .map(|tag| {
                let out = dir.path().join(format!("{algo}_{tag}"));
                let o = hmfm(&[
                    "fit", "--data", path(&data), "--algo", algo, "--iters", "400", "--burnin", "200", "--seed", "9",
                    "--out", path(&out),
                ]);
                assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
                out
            })
            .collect();
        let mut names: Vec<_> = std::fs::read_dir(&runs[0]).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        assert!(names.iter().any(|n| n == "partition.csv"));
        for name in names {
            let a = std::fs::read(runs[0].join(&name)).unwrap();
            let b = std::fs::read(runs[1].join(&name)).unwrap();
            assert!(a == b, "{algo}: {name:?} differs between identical runs");
        }
    }

    let fit = dir.path().join("conditional_a");
    let m = hmfm(&["metrics", "--fit", path(&fit), "--truth", path(&sim)]);
    assert!(m.status.success());
    let text = stdout(&m);
    assert!(text.starts_with("metric,group,value"));
    assert!(text.lines().any(|l| l.starts_with("ari,all,")));
}
