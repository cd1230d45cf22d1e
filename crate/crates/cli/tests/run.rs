use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qae_cli::runner::read_summary;
use qae_cli::{compare, run, ExperimentConfig};
use serde_json::{json, Value};

fn schema() -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/summary.schema.json");
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(summary: &Value) {
    let validator = jsonschema::validator_for(&schema()).unwrap();
    let errors: Vec<String> = validator.iter_errors(summary).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn config(value: Value) -> ExperimentConfig {
    ExperimentConfig::parse(&value.to_string()).unwrap()
}

fn ferro_pimc() -> Value {
    json!({
        "instance": {"inline": {"n_spins": 2, "couplings": [[0, 1, 1.0]]}},
        "engine": {"kind": "pimc", "beta": 1.0, "trotter_m": 2},
        "schedule": {"kind": "corollary1"},
        "horizon": 1000,
        "seeds": [0, 1, 2],
        "checkpoint_every": 100
    })
}

fn glass6(name: &str, engine: Value, schedule: Value) -> Value {
    json!({
        "name": name,
        "instance": {"generate": {"n": 6, "seed": 1000}},
        "engine": engine,
        "schedule": schedule,
        "horizon": 20000,
        "seeds": [0, 1, 2, 3, 4],
        "checkpoint_every": 5000
    })
}

fn trace_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    v.sort();
    v
}

#[test]
fn minimal_config_writes_three_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&config(ferro_pimc()), dir.path()).unwrap();
    assert_eq!(trace_files(dir.path()).len(), 3);
    assert!(summary.hit_rate.is_some());
    assert_eq!(summary.results.len(), 3);
    assert_eq!(summary.instance.e_min, Some(-1.0));

    let raw: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert!(raw.get("hit_rate").is_some());
    assert_valid(&raw);
    assert_eq!(read_summary(dir.path()).unwrap(), summary);
    for r in &summary.results {
        let text = fs::read_to_string(dir.path().join(&r.trace_path)).unwrap();
        assert!(text.starts_with("step,control_value,"));
        assert_eq!(text.lines().count(), 1 + 11);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = ferro_pimc();
    cfg["seeds"] = json!([5, 3, 9, 1]);
    run(&config(cfg.clone()), a.path()).unwrap();
    run(&config(cfg), b.path()).unwrap();
    let (fa, fb) = (trace_files(a.path()), trace_files(b.path()));
    assert_eq!(fa.len(), 4);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert_eq!(fs::read(a.path().join("summary.json")).unwrap(), fs::read(b.path().join("summary.json")).unwrap());
}

#[test]
fn every_engine_summary_validates() {
    let engines = [
        (json!({"kind": "gfmc", "variant": "G1", "n_walkers": 20}), json!({"kind": "gfmc_power"})),
        (
            json!({"kind": "gfmc", "variant": "G2", "n_walkers": 20, "dt": 0.1, "e_t": "ground_state"}),
            json!({"kind": "gfmc_g2", "params": {"b": 0.25}}),
        ),
        (json!({"kind": "sa"}), json!({"kind": "geman_geman", "params": {"N": 12}})),
        (
            json!({"kind": "pimc", "beta": 1.0, "trotter_m": 3, "acceptance": {"kind": "tsallis", "q": 1.5}}),
            json!({"kind": "tsallis_T1", "params": {"c": 0.02}}),
        ),
    ];
    for (engine, schedule) in engines {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = glass6("e", engine.clone(), schedule);
        cfg["horizon"] = json!(500);
        cfg["checkpoint_every"] = json!(100);
        let summary = run(&config(cfg), dir.path()).unwrap_or_else(|e| panic!("{engine}: {e}"));
        assert_eq!(summary.results.len(), 5);
        let raw: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_valid(&raw);
    }
}

#[test]
fn plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ferro_pimc();
    cfg["output"] = json!({"plots": true});
    run(&config(cfg), dir.path()).unwrap();
    for seed in 0..3 {
        let svg = fs::read_to_string(dir.path().join(format!("plot_seed{seed}.svg"))).unwrap();
        assert!(svg.contains("<polyline"));
    }
}

#[test]
fn lab_engine_reports_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "instance": {"inline": {"n_spins": 1, "fields": [[0, 0.5]]}},
        "engine": {"kind": "lab", "chain": "pimc_boltzmann", "acceptance": {"kind": "heat_bath"}, "blocks": 50},
        "schedule": {"kind": "log_inverse_T"},
        "horizon": 10000,
        "seeds": [0]
    });
    let summary = run(&config(cfg), dir.path()).unwrap();
    assert!(summary.results.is_empty());
    assert_eq!(summary.lab_reports.len(), 5);
    assert!(summary.lab_pass, "{:#?}", summary.lab_reports);
    let raw: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_valid(&raw);
}

#[test]
fn compare_sa_against_qa_with_constant_control() {
    let dir = tempfile::tempdir().unwrap();
    let pimc = json!({"kind": "pimc", "beta": 0.5, "trotter_m": 2});
    let cfgs = vec![
        config(glass6("sa", json!({"kind": "sa"}), json!({"kind": "geman_geman", "params": {"N": 12}}))),
        config(glass6("qa", pimc.clone(), json!({"kind": "power_gamma"}))),
        config(glass6("constant", pimc, json!({"kind": "constant", "params": {"value": 1.0}}))),
    ];
    let table = compare(&cfgs, dir.path(), 0.01).unwrap();
    let ids: Vec<&str> = table.rows.iter().map(|r| r.schedule_id.as_str()).collect();
    assert_eq!(ids, vec!["sa", "qa", "constant"]);
    assert_eq!(table.seeds, vec![0, 1, 2, 3, 4]);
    for row in &table.rows {
        assert_eq!(row.runs, 5);
        assert!(row.hit_rate.is_some());
    }
    assert!(table.rows[1].t1_estimate.is_some());
    assert!(table.rows[0].t1_estimate.is_none());
    for id in ["sa", "qa", "constant"] {
        let s = read_summary(&dir.path().join(id)).unwrap();
        assert_eq!(s.seeds, vec![0, 1, 2, 3, 4]);
    }
    assert!(dir.path().join("comparison.json").exists());
}

#[test]
fn compare_rejects_mismatched_instances() {
    let dir = tempfile::tempdir().unwrap();
    let a = glass6("a", json!({"kind": "sa"}), json!({"kind": "geman_geman", "params": {"N": 12}}));
    let mut b = a.clone();
    b["instance"] = json!({"generate": {"n": 6, "seed": 1001}});
    let err = compare(&[config(a), config(b)], dir.path(), 0.01).unwrap_err();
    assert!(err.to_string().contains("instance"), "{err}");
}

/// Frozen after calibration: N=4 instance seed 11, one walker, seeds 0..99.
#[test]
fn green_function_variants_reach_ground_state_under_boundary_schedules() {
    let seeds: Vec<u64> = (0..100).collect();
    let base = |engine: Value, schedule: Value| {
        config(json!({
            "instance": {"generate": {"n": 4, "seed": 11}},
            "engine": engine,
            "schedule": schedule,
            "horizon": 100000,
            "seeds": seeds,
            "checkpoint_every": 50000
        }))
    };
    let g1 = base(json!({"kind": "gfmc", "variant": "G1", "n_walkers": 1}), json!({"kind": "gfmc_power"}));
    let g2 = base(
        json!({"kind": "gfmc", "variant": "G2", "n_walkers": 1, "dt": 0.1}),
        json!({"kind": "gfmc_g2", "params": {"b": 0.25}}),
    );
    let dir = tempfile::tempdir().unwrap();
    let table = compare(&[g1, g2], dir.path(), 0.01).unwrap();
    for row in &table.rows {
        assert!(row.hits >= 95, "{row:?}");
    }
}

fn qae() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qae"))
}

#[test]
fn binary_honours_output_override_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, ferro_pimc().to_string()).unwrap();
    let out = dir.path().join("elsewhere");
    let status = qae().arg("run").arg(&cfg_path).env("QAE_OUT", &out).status().unwrap();
    assert!(status.success());
    assert_eq!(trace_files(&out).len(), 3);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"instance\": {\"generate\": {\"n\": 2, \"seed\": 0}},\n  \"horizon\": -1\n}").unwrap();
    let o = qae().arg("run").arg(&bad).output().unwrap();
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("horizon"), "{err}");
}

#[test]
fn lab_subcommand_exits_nonzero_on_falsification() {
    let ok = qae().args(["lab", "--chain", "gfmc_g1", "--check", "lemma2", "--t-max", "1000"]).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let reports: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(reports[0]["check"], "lemma2");

    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, spec: Value| {
        let path = dir.path().join(name);
        fs::write(&path, spec.to_string()).unwrap();
        path
    };

    // a rising kinetic temperature drains the minimal-F1 states
    let heating = write(
        "heating.json",
        json!({
            "kind": "pimc_boltzmann",
            "instance": {"n_spins": 1, "fields": [[0, 0.5]]},
            "schedule": {"kind": "exponential_T1", "params": {"b": 0.5, "c": -0.001}},
            "beta": 1.0,
            "trotter_m": 2,
            "acceptance": {"kind": "heat_bath"}
        }),
    );
    let o = qae().args(["lab", "--chain", "pimc_boltzmann", "--check", "monotonicity", "--t-max", "500", "--config"])
        .arg(&heating)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));

    // dt too large for the linear Green's function is a configuration error, not a falsification
    let invalid = write(
        "invalid.json",
        json!({
            "kind": "gfmc_g1",
            "instance": {"n_spins": 2, "couplings": [[0, 1, 1.0]]},
            "schedule": {"kind": "constant", "params": {"value": 1.0}},
            "dt": 5.0,
            "e_t": 0.0
        }),
    );
    let o = qae().args(["lab", "--chain", "gfmc_g1", "--check", "stationarity", "--config"]).arg(&invalid).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gen_instance_round_trips() {
    let o = qae().args(["gen-instance", "--n", "5", "--seed", "3"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let inst: qae_core::ising::IsingInstance = serde_json::from_str(&text).unwrap();
    assert_eq!(inst.n_spins(), 5);
    assert_eq!(inst, qae_core::ising::random_instance(5, qae_core::ising::CouplingDistribution::PlusMinusJ, 3).unwrap());
}
