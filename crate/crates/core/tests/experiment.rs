use dynslam::eval::{RunStatus, SequenceReport, METRICS_HEADER};
use dynslam::experiment::{preset, preset_names, run_experiment, run_method, run_suite, ExperimentConfig, SceneData, Solver};
use dynslam::formulations::Formulation;
use dynslam::Error;

fn short(name: &str, frames: u32) -> ExperimentConfig {
    let mut cfg = preset(name).unwrap();
    let mut scene = cfg.resolve_scene().unwrap();
    scene.num_frames = frames;
    cfg.scene = Some(scene);
    cfg
}

#[test]
fn every_preset_parses_and_validates() {
    let names: Vec<&str> = preset_names().collect();
    assert!(names.contains(&"desk-2obj"));
    for name in names {
        let cfg = preset(name).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.name, name);
    }
    assert!(matches!(preset("nope"), Err(Error::InvalidConfig(_))));
}

#[test]
fn suite_reports_every_method_once() {
    let report = run_suite(&short("desk-2obj", 8)).unwrap();
    let names: Vec<&str> = report.methods.iter().map(|m| m.method.as_str()).collect();
    assert_eq!(names, ["Hybrid", "iHybrid", "Baseline", "iBaseline", "Parallel-Hybrid"]);
    let csv = report.metrics_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], METRICS_HEADER);
    assert_eq!(lines.len(), 6);
    assert!(report.methods.iter().all(|m| m.status == RunStatus::Ok && m.frames_processed == 8));
}

#[test]
fn metrics_are_reproducible() {
    let cfg = preset("object-churn").unwrap();
    let a = run_suite(&cfg).unwrap();
    let b = run_suite(&cfg).unwrap();
    assert_eq!(a.metrics_csv(), b.metrics_csv());
    for (x, y) in a.methods.iter().zip(&b.methods) {
        assert_eq!(SequenceReport::stats_csv(x).lines().count(), SequenceReport::stats_csv(y).lines().count());
    }
}

#[test]
fn without_objects_the_formulations_coincide() {
    let cfg = preset("static-only").unwrap();
    let report = run_suite(&cfg).unwrap();
    let ate = |name: &str| report.method(name).unwrap().metrics.as_ref().unwrap().ate_trans;
    assert!((ate("Hybrid") - ate("Baseline")).abs() <= 1e-9);
    assert!((ate("iHybrid") - ate("iBaseline")).abs() <= 1e-9);
    assert!((ate("iHybrid") - ate("Parallel-Hybrid")).abs() <= 1e-9);
    assert!(ate("Hybrid") < 0.05);
}

#[test]
fn parallel_baseline_is_a_config_error() {
    let mut cfg = short("desk-2obj", 5);
    cfg.formulation = Formulation::Baseline;
    cfg.solver = Solver::Parallel;
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    assert!(matches!(run_experiment(&cfg), Err(Error::InvalidConfig(_))));
    let scene_cfg = cfg.resolve_scene().unwrap();
    let scene = SceneData::generate(&scene_cfg).unwrap();
    let spec = cfg.method(&scene_cfg, Formulation::Baseline, Solver::Parallel);
    assert!(matches!(run_method(&spec, &scene), Err(Error::InvalidConfig(_))));
}

#[test]
fn exhausted_budget_yields_a_partial_failed_report() {
    for solver in [Solver::Incremental, Solver::Parallel, Solver::Batch] {
        let mut cfg = short("continuous-visibility-4obj", 15);
        cfg.solver = solver;
        cfg.budget_mb = Some(0.05);
        let report = run_experiment(&cfg).unwrap();
        let m = &report.methods[0];
        assert!(matches!(&m.status, RunStatus::Failed(e) if e.contains("budget")), "{solver}: {:?}", m.status);
        if solver != Solver::Batch {
            assert!(m.frames_processed < 15, "{solver}");
        }
        assert!(m.metrics.is_none());
    }
}

#[test]
fn config_rejects_unknown_fields_and_double_scenes() {
    assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    let mut cfg = short("desk-2obj", 5);
    cfg.scene_file = Some("scene.toml".into());
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    cfg.scene_file = None;
    cfg.budget_mb = Some(-1.0);
    assert!(cfg.validate().is_err());
}

#[test]
fn scene_file_resolves_next_to_the_config() {
    let dir = std::env::temp_dir().join(format!("dynslam-exp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let scene = short("desk-2obj", 4).resolve_scene().unwrap();
    std::fs::write(dir.join("scene.toml"), scene.to_toml().unwrap()).unwrap();
    std::fs::write(dir.join("exp.toml"), "scene_file = \"scene.toml\"\nsolver = \"batch\"\nseed = 9\n").unwrap();
    let cfg = ExperimentConfig::from_path(&dir.join("exp.toml")).unwrap();
    let resolved = cfg.resolve_scene().unwrap();
    assert_eq!(resolved.rng_seed, 9);
    assert_eq!(resolved.num_frames, 4);
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.methods[0].method, "Hybrid");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn report_files_are_written() {
    let dir = std::env::temp_dir().join(format!("dynslam-report-{}", std::process::id()));
    let mut cfg = short("desk-2obj", 6);
    cfg.out = Some(dir.clone());
    let report = run_suite(&cfg).unwrap();
    for f in ["report.json", "report.txt", "metrics.csv", "timing.csv", "stats_ihybrid.csv", "per_object_parallel_hybrid.csv"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["methods"].as_array().unwrap().len(), 5);
    assert_eq!(std::fs::read_to_string(dir.join("metrics.csv")).unwrap(), report.metrics_csv());
    std::fs::remove_dir_all(&dir).unwrap();
}
