//! End-to-end tests of the `mpemba` binary: exit codes, file layout,
//! header stamping, and byte-level determinism on small chains.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mpemba");

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn assert_exit(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&read(path)).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .collect()
}

const SMALL_CHAIN: &str = r#"
[model]
l = 7

[geometry]
qos_sites = [3, 5]

[time]
t_max = 0.5
n_points = 5

[ensemble]
n_samples = 2
dt_max = 5.0
seed = 7

[analysis]
delta_omega_bins = 50
"#;

#[test]
fn relax_output_is_byte_identical_across_reruns() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.7853981633974483]\ntheta_b = [1.5707963267948966]\n"),
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&["relax", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_exit(&out, 0);
    }
    for name in ["relax_0.7854_1.5708.csv", "relax_fits.json"] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs");
    }
    let csv = read(&a.join("relax_0.7854_1.5708.csv"));
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# mpemba relax v"));
    let hash_line = lines.next().unwrap();
    let hash = hash_line.strip_prefix("# config sha256 ").unwrap();
    assert_eq!(hash.len(), 64);
    assert!(hash.chars().all(|c| c.is_ascii_hexdigit()));
    assert_eq!(lines.next().unwrap(), "t,delta_s");
    assert_eq!(data_rows(&csv).len(), 5);
    let fits = read_json(&a.join("relax_fits.json"));
    assert_eq!(fits["config_sha256"].as_str().unwrap(), hash);
}

#[test]
fn json_config_matches_toml_equivalent() {
    let tmp = TempDir::new().unwrap();
    let toml_config = write_config(
        tmp.path(),
        &format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.7853981633974483]\ntheta_b = [1.5707963267948966]\n"),
    );
    let json_config = tmp.path().join("run.json");
    std::fs::write(
        &json_config,
        r#"{
  "model": {"l": 7},
  "geometry": {"qos_sites": [3, 5]},
  "init": {"theta_s": [0.7853981633974483], "theta_b": [1.5707963267948966]},
  "time": {"t_max": 0.5, "n_points": 5},
  "ensemble": {"n_samples": 2, "dt_max": 5.0, "seed": 7},
  "analysis": {"delta_omega_bins": 50}
}"#,
    )
    .unwrap();
    let (t, j) = (tmp.path().join("t"), tmp.path().join("j"));
    for (config, dir) in [(&toml_config, &t), (&json_config, &j)] {
        let out = run(&["relax", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_exit(&out, 0);
    }
    for name in ["relax_0.7854_1.5708.csv", "relax_fits.json"] {
        assert_eq!(read(&t.join(name)), read(&j.join(name)), "{name} differs");
    }
}

#[test]
fn charge_eigenstate_start_gives_flat_zero_curve() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.0]\ntheta_b = [0.0]\n"),
    );
    let dir = tmp.path().join("out");
    let out = run(&["relax", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    let csv = read(&dir.join("relax_0.0000_0.0000.csv"));
    for row in data_rows(&csv) {
        let delta_s: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(delta_s.abs() < 1e-12, "expected zero asymmetry, got {delta_s}");
    }
    let fits = read_json(&dir.join("relax_fits.json"));
    assert!(
        fits["curves"][0]["fit"]["fit_error"].is_string(),
        "flat curve must report a fit error, got {fits}"
    );
}

#[test]
fn single_sample_run_skips_averaging() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "[model]\nl = 7\n[geometry]\nqos_sites = [3, 5]\n\
         [init]\ntheta_s = [0.7853981633974483]\ntheta_b = [1.5707963267948966]\n\
         [time]\nt_max = 0.5\nn_points = 3\n\
         [ensemble]\nn_samples = 1\ndt_min = 100.0\ndt_max = 100.0\nseed = 3\n",
    );
    let dir = tmp.path().join("out");
    let out = run(&["relax", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    assert!(dir.join("relax_0.7854_1.5708.csv").exists());
}

#[test]
fn qme_with_identical_pairs_reports_no_effect() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{SMALL_CHAIN}\n[init]\n\
             theta_s = [1.5707963267948966, 1.5707963267948966]\n\
             theta_b = [0.7853981633974483, 0.7853981633974483]\n"
        ),
    );
    let dir = tmp.path().join("out");
    let out = run(&["qme", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    let verdict = read_json(&dir.join("qme_verdict.json"));
    assert_eq!(verdict["occurs"], Value::Bool(false));
    assert!(verdict["mpemba_time"].is_null());
    assert_eq!(data_rows(&read(&dir.join("qme_curves.csv"))).len(), 5);
}

#[test]
fn qme_verdict_is_symmetric_under_pair_exchange() {
    let tmp = TempDir::new().unwrap();
    let forward = write_config(
        tmp.path(),
        &format!(
            "{SMALL_CHAIN}\n[init]\n\
             theta_s = [1.5707963267948966, 0.7853981633974483]\n\
             theta_b = [1.5707963267948966, 0.7853981633974483]\n"
        ),
    );
    let dir_f = tmp.path().join("f");
    assert_exit(
        &run(&["qme", "--config", forward.to_str().unwrap(), "--out", dir_f.to_str().unwrap()]),
        0,
    );
    let swapped_body = format!(
        "{SMALL_CHAIN}\n[init]\n\
         theta_s = [0.7853981633974483, 1.5707963267948966]\n\
         theta_b = [0.7853981633974483, 1.5707963267948966]\n"
    );
    let swapped = tmp.path().join("swapped.toml");
    std::fs::write(&swapped, swapped_body).unwrap();
    let dir_s = tmp.path().join("s");
    assert_exit(
        &run(&["qme", "--config", swapped.to_str().unwrap(), "--out", dir_s.to_str().unwrap()]),
        0,
    );
    let vf = read_json(&dir_f.join("qme_verdict.json"));
    let vs = read_json(&dir_s.join("qme_verdict.json"));
    for key in ["occurs", "mpemba_time", "margin"] {
        assert_eq!(vf[key], vs[key], "{key} changed under pair exchange");
    }
}

#[test]
fn spectra_writes_sector_table_and_gap_histograms() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.7853981633974483]\ntheta_b = [1.5707963267948966]\n"),
    );
    let dir = tmp.path().join("out");
    let out = run(&["spectra", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    let sectors = read(&dir.join("sector_variance.csv"));
    assert!(sectors.contains("n_up,dim,mean_energy,energy_variance"));
    assert_eq!(data_rows(&sectors).len(), 8);
    let m0 = read(&dir.join("element_gaps_m0.csv"));
    assert!(m0.contains("omega,count,pair_density,level_density,mean_weight,weighted_density"));
    assert!(!data_rows(&m0).is_empty());
}

#[test]
fn krylov_writes_chains_correlators_and_suppression() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        "[model]\nl = 6\n[geometry]\nqos_sites = [2, 4]\n\
         [time]\nt_max = 0.5\nn_points = 3\n",
    );
    let dir = tmp.path().join("out");
    let out = run(&["krylov", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    for q in 0..3 {
        let chain = read(&dir.join(format!("krylov_chain_q{q}.csv")));
        assert!(chain.contains("n,a_n,b_n,re_c,im_c"));
        assert!(!data_rows(&chain).is_empty());
    }
    let corr = read(&dir.join("krylov_correlation.csv"));
    let qprimes: std::collections::BTreeSet<&str> = data_rows(&corr)
        .iter()
        .map(|row| row.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(qprimes.into_iter().collect::<Vec<_>>(), ["0", "1", "2"]);
    let suppression = read_json(&dir.join("krylov_suppression.json"));
    assert_eq!(suppression["entries"].as_array().unwrap().len(), 3);
}

#[test]
fn theory_emits_prediction_simulation_and_svg() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!(
            "{SMALL_CHAIN}\n[init]\ntheta_s = [0.7853981633974483]\ntheta_b = [1.5707963267948966]\n\
             [output]\nemit_svg = true\n"
        ),
    );
    let dir = tmp.path().join("out");
    let out = run(&["theory", "--config", config.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_exit(&out, 0);
    let vs = read(&dir.join("theory_vs_sim.csv"));
    assert!(vs.contains("t,re_theory,im_theory,abs_theory,re_sim,im_sim,abs_sim"));
    assert_eq!(data_rows(&vs).len(), 5);
    let per_m = read(&dir.join("theory_per_m.csv"));
    assert!(data_rows(&per_m).len() >= 5);
    let fits = read_json(&dir.join("theory_fits.json"));
    assert!(fits["max_abs_deviation_sim_vs_theory"].is_number());
    let svg = read(&dir.join("theory.svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("<polyline"));
}

#[test]
fn config_problems_exit_with_code_two() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("out");
    let dir_arg = dir.to_str().unwrap().to_string();

    let missing = tmp.path().join("absent.toml");
    let out = run(&["relax", "--config", missing.to_str().unwrap(), "--out", &dir_arg]);
    assert_exit(&out, 2);

    let unknown_key = write_config(tmp.path(), "[model]\nl = 7\nfoo = 1\n");
    let out = run(&["relax", "--config", unknown_key.to_str().unwrap(), "--out", &dir_arg]);
    assert_exit(&out, 2);

    let big_krylov = tmp.path().join("big.toml");
    std::fs::write(&big_krylov, "[model]\nl = 10\n[geometry]\nqos_sites = [4, 6]\n").unwrap();
    let out = run(&["krylov", "--config", big_krylov.to_str().unwrap(), "--out", &dir_arg]);
    assert_exit(&out, 2);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("configuration error"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let single_pair = tmp.path().join("single.toml");
    std::fs::write(
        &single_pair,
        format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.5]\ntheta_b = [0.5]\n"),
    )
    .unwrap();
    let out = run(&["qme", "--config", single_pair.to_str().unwrap(), "--out", &dir_arg]);
    assert_exit(&out, 2);
}

#[test]
fn unwritable_output_directory_exits_with_code_three() {
    let tmp = TempDir::new().unwrap();
    let config = write_config(
        tmp.path(),
        &format!("{SMALL_CHAIN}\n[init]\ntheta_s = [0.5]\ntheta_b = [0.5]\n"),
    );
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = run(&["relax", "--config", config.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_exit(&out, 3);
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("runtime error"),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
