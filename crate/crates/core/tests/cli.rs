use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nspsim");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn nspsim")
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.cfg");
    fs::write(
        &p,
        "# desk-scale run\nnum_trials = 40\nnum_samples = 64\ngrid_step_deg = 1\nsnr_db = 0\nseed = 17\n",
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

fn simulate(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let cfg = small_config(dir);
    let out = dir.join(out);
    let mut args = vec!["simulate", "--config", &cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "res", &["--hrms", "1,2,3,4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("res");
    for name in [
        "trials.csv",
        "summary.csv",
        "manifest.txt",
        "scatter_original.csv",
        "scatter_nsp.csv",
        "scatter_nsp_perturbed_h1.csv",
        "scatter_nsp_perturbed_h4.csv",
    ] {
        assert!(res.join(name).exists(), "missing {name}");
    }
    let trials = fs::read_to_string(res.join("trials.csv")).unwrap();
    assert_eq!(
        trials.lines().next().unwrap(),
        "trial_id,arm,h_rms,theta_true_deg,theta_hat_deg,leakage,nullity,failed"
    );
    // 2 shared arms + 2 swept arms × 4 h_rms, per trial
    assert_eq!(trials.lines().count() - 1, 40 * (2 + 2 * 4));
    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), "arm,h_rms,rmse_deg,bias_deg,mean_leakage,n_trials");
    assert_eq!(summary.lines().count() - 1, 10);
    let scatter = fs::read_to_string(res.join("scatter_nsp_perturbed_h2.csv")).unwrap();
    assert_eq!(scatter.lines().next().unwrap(), "theta_true_deg,theta_hat_deg");
    assert_eq!(scatter.lines().count() - 1, 40);
}

#[derive(Default)]
struct Acc {
    n: usize,
    err: f64,
    sq: f64,
    leak: f64,
    n_leak: usize,
}

/// Recomputes summary statistics straight from trials.csv.
#[test]
fn summary_matches_recomputation_from_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "res", &["--projection-target", "stale"]);
    assert!(out.status.success());
    let res = dir.path().join("res");

    let mut acc: BTreeMap<(String, String), Acc> = BTreeMap::new();
    for line in fs::read_to_string(res.join("trials.csv")).unwrap().lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 8);
        if f[7] == "1" {
            continue;
        }
        let a = acc.entry((f[1].to_string(), f[2].to_string())).or_default();
        let truth: f64 = f[3].parse().unwrap();
        let est: f64 = f[4].parse().unwrap();
        a.n += 1;
        a.err += est - truth;
        a.sq += (est - truth).powi(2);
        if !f[5].is_empty() {
            a.leak += f[5].parse::<f64>().unwrap();
            a.n_leak += 1;
        }
    }

    let summary = fs::read_to_string(res.join("summary.csv")).unwrap();
    let mut rows = 0;
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let a = &acc[&(f[0].to_string(), f[1].to_string())];
        let rmse: f64 = f[2].parse().unwrap();
        let bias: f64 = f[3].parse().unwrap();
        let leak: f64 = f[4].parse().unwrap();
        let n: usize = f[5].parse().unwrap();
        assert_eq!(n, a.n);
        assert!((rmse - (a.sq / a.n as f64).sqrt()).abs() <= 1e-9, "{line}");
        assert!((bias - a.err / a.n as f64).abs() <= 1e-9, "{line}");
        assert!((leak - a.leak / a.n_leak as f64).abs() <= 1e-9 * leak.max(1.0), "{line}");
        rows += 1;
    }
    assert_eq!(rows, acc.len());
}

#[test]
fn rerun_is_byte_identical_and_manifest_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "a", &["--perturbation-style", "complex"]).status.success());
    assert!(simulate(dir.path(), "b", &["--perturbation-style", "complex"]).status.success());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for name in ["trials.csv", "summary.csv", "scatter_nsp.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let strip = |p: &Path| -> String {
        fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# timestamp") && !l.starts_with("# output"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a.join("manifest.txt")), strip(&b.join("manifest.txt")));

    let manifest = a.join("manifest.txt");
    let c = dir.path().join("c");
    let out = run(&["simulate", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(a.join("trials.csv")).unwrap(), fs::read(c.join("trials.csv")).unwrap());
}

#[test]
fn validation_errors_exit_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "m_tx = 4\nn_rx = 4\n").unwrap();
    let out = run(&["simulate", "--config", bad.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("n_rx") && err.contains("no null space"), "{err}");

    fs::write(&bad, "colour = blue\n").unwrap();
    let out = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    assert_eq!(run(&["simulate", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--hrms", "1,oops"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--projection-target", "sideways"]).status.code(), Some(1));
    assert_eq!(run(&["simulate", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        run(&["simulate", "--config", dir.path().join("missing.cfg").to_str().unwrap()]).status.code(),
        Some(1)
    );
}

#[test]
fn unwritable_output_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let cfg = small_config(dir.path());
    let out = run(&["simulate", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_snr_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(dir.path(), "res", &["--snr-db", "-3", "--trials", "5", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(dir.path().join("res/manifest.txt")).unwrap();
    assert!(manifest.contains("snr_db = -3"));
    assert!(manifest.contains("num_trials = 5"));
    assert!(manifest.contains("seed = 9"));
}
