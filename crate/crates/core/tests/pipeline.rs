use std::fs;

use qmpso::pipeline::{run_experiment, RunConfig};
use qmpso::TfimParams;
use serde_json::{json, Value};

fn small(name: &str) -> RunConfig {
    let cfg = RunConfig::from_overrides(
        name,
        &json!({
            "model": { "L": 6 },
            "chis": [2, 4],
            "n_l_mps": 2,
            "layer_scan": [1],
            "sizes": [4, 6],
            "t_max_mps": 0.5,
            "t_max_mpo": 0.2,
            "t_final": 0.8,
            "t_step": 0.1,
            "trotter_dt": 0.1,
            "epsilons": [1e-3],
            "max_sweeps_qmps": 30,
            "max_sweeps_qmpo": 10,
            "seed": 3,
            "random_init": true,
        }),
    )
    .unwrap();
    assert_eq!(cfg.model, TfimParams::critical(6, 0.01));
    cfg
}

#[test]
fn every_experiment_writes_csv_svg_and_manifest() {
    for name in qmpso::pipeline::EXPERIMENTS {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(name);
        let files = run_experiment(&cfg, dir.path()).unwrap();
        assert!(files.iter().any(|p| p.extension().is_some_and(|e| e == "csv")), "{name}");
        assert!(files.iter().any(|p| p.extension().is_some_and(|e| e == "svg")), "{name}");
        let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["experiment"], name);
        assert_eq!(manifest["config_hash"], cfg.hash());
        for (file, digest) in manifest["files"].as_object().unwrap() {
            let bytes = fs::read(dir.path().join(file)).unwrap();
            assert_eq!(digest.as_str().unwrap().len(), 64, "{file}");
            assert!(!bytes.is_empty());
        }
    }
}

#[test]
fn rerun_produces_identical_files() {
    let cfg = small("fig6");
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, a.path()).unwrap();
    run_experiment(&cfg, b.path()).unwrap();
    for name in ["fidelity.csv", "advantage.csv", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn csv_schemas_follow_the_interface() {
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small("fig7"), dir.path()).unwrap();
    let head = |f: &str| fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(head("magnetization.csv"), "t,site,method,z");
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small("fig6"), dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join("fidelity.csv")).unwrap().lines().next().unwrap(),
        "t,epsilon,method,F,infidelity_per_site"
    );
    assert_eq!(fs::read_to_string(dir.path().join("advantage.csv")).unwrap().lines().next().unwrap(), "t,epsilon,region");
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&small("fig2"), dir.path()).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("entropy.csv")).unwrap().lines().next().unwrap(), "t,cut,chi,S_vN");
}

#[test]
fn unknown_experiment_and_unwritable_dir_are_errors() {
    assert!(RunConfig::preset("fig3").is_err());
    let mut cfg = small("fig2");
    cfg.experiment = "fig3".into();
    assert!(run_experiment(&cfg, std::path::Path::new("/tmp")).is_err());
    let file = tempfile::NamedTempFile::new().unwrap();
    assert!(run_experiment(&small("fig2"), &file.path().join("sub")).is_err());
}

#[test]
fn changing_the_seed_changes_the_hash() {
    let a = small("fig4");
    let b = RunConfig { seed: 4, ..a.clone() };
    assert_ne!(a.hash(), b.hash());
    assert_eq!(a.hash(), a.clone().hash());
}
