use std::path::Path;
use std::process::Command;

use sirmeta::config::{ExperimentConfig, Mode, ThetaGrid};
use sirmeta::pp::{ProcessKind, Window};
use sirmeta::sir::TierSpec;

fn sirmeta(args: &[&str], cfg: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sirmeta"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .env_remove("SIRMETA_SEED")
        .output()
        .expect("binary runs")
}

fn small_config(mode: Mode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        tiers: vec![TierSpec::at_intrinsic_density(ProcessKind::TriangularLattice { eta: 1.0 }, 1.0, 4.0).unwrap()],
        window: Window::new(12.0).unwrap(),
        theta_db: ThetaGrid {
            start: -10.0,
            stop: 5.0,
            step: 5.0,
        },
        x: vec![0.5, 0.9],
        n: 300,
        seed: 3,
        ..ExperimentConfig::default()
    }
}

#[test]
fn repeated_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, small_config(Mode::MetaSim).to_json().unwrap()).unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}.csv"));
        let o = sirmeta(&["meta-sim", "--threads", threads, "--out", out.to_str().unwrap()], &cfg_path);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.pop().unwrap()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "theta_db,x,fbar,stderr,method");
    assert_eq!(text.lines().count(), 1 + 4 * 2);
}

#[test]
fn seed_override_changes_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut cfg = small_config(Mode::G0);
    cfg.tiers[0].kind = ProcessKind::Poisson;
    cfg.tiers[0].lambda = 0.5;
    std::fs::write(&cfg_path, cfg.to_json().unwrap()).unwrap();
    let a = sirmeta(&["g0", "--seed", "1"], &cfg_path);
    let b = sirmeta(&["g0", "--seed", "2"], &cfg_path);
    assert!(a.status.success() && b.status.success());
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn bad_config_fails_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{"mode":"g0","tiers":[{"kind":"poisson","lambda":0.1,"alpha":1.5}],"theta_db":{"start":0,"stop":1,"step":1}}"#,
    )
    .unwrap();
    let o = sirmeta(&["g0"], &cfg_path);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("tiers[0]"), "{err}");
}

#[test]
fn analytic_output_is_a_ccdf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut cfg = small_config(Mode::MetaAnalytic);
    cfg.tiers[0] = cfg.tiers[0].with_gain_db(3.6);
    std::fs::write(&cfg_path, cfg.to_json().unwrap()).unwrap();
    let o = sirmeta(&["meta-analytic"], &cfg_path);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<(f64, f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 8);
    for pair in rows.chunks(2) {
        // decreasing in x at fixed theta
        assert!(pair[1].2 <= pair[0].2 + 1e-9);
    }
    for i in 0..2 {
        let col: Vec<f64> = rows.iter().filter(|r| r.1 == cfg.x[i]).map(|r| r.2).collect();
        assert!(col.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{col:?}");
        assert!(col.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
