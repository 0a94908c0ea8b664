use std::process::Command;

use clap::Parser;
use haas_bench::Program;
use haas_cli::{dispatch, Cli, Command as Sub};
use haas_core::{Level, Library, RunConfig, RunResult};

fn haas() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_haas"));
    c.env_remove("HAAS_CONFIG");
    c
}

#[test]
fn binary_run_matches_library_run() {
    let out = haas()
        .args(["run", "--scenario", "Standard Production", "--strategy", "ducb+off", "--seed", "17", "--cycles", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let from_cli: RunResult = serde_json::from_slice(&out.stdout).unwrap();

    let mut config = RunConfig::new("Standard Production", "ducb+off".parse().unwrap(), 17);
    config.cycles = Some(3);
    let direct = haas_core::run(&config, &Library::builtin()).unwrap();
    assert_eq!(from_cli, direct);
    assert_eq!(from_cli.sprints.len(), 3);
}

#[test]
fn config_env_var_supplies_params() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("params.json");
    std::fs::write(&cfg, r#"{"bandit": {"linucb_alpha": 1.2}}"#).unwrap();
    let result = dir.path().join("run.json");
    let status = haas()
        .env("HAAS_CONFIG", &cfg)
        .args(["run", "--cycles", "1", "--context-fatigue", "off", "--out"])
        .arg(&result)
        .status()
        .unwrap();
    assert!(status.success());
    let r: RunResult = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(r.config.params.bandit.linucb_alpha, 1.2);
    assert!(!r.config.params.bandit.context_fatigue);
    assert_eq!(r.config.params.bandit.ucb_c, 1.5);
}

#[test]
fn bench_flags_shape_the_grid() {
    let cli = Cli::try_parse_from([
        "haas", "bench", "ladder", "--domain", "manufacturing", "--strategy", "linucb,ucb1",
        "--policies", "off", "--gov-level", "L1,L3", "--seeds", "11,13", "--cycles", "2",
        "--reward-profile", "cost_time", "--jobs", "2",
    ])
    .unwrap();
    let Sub::Bench(args) = cli.command else { panic!("expected bench") };
    assert_eq!(args.program, Program::Ladder);
    let spec = args.spec(&Library::builtin(), Default::default()).unwrap();
    assert_eq!(spec.scenarios, vec!["Standard Production".to_string()]);
    assert!(spec.strategies.iter().all(|s| !s.policies));
    assert_eq!(spec.levels, vec![Level::L1, Level::L3]);
    assert_eq!(spec.seeds, vec![11, 13]);
    assert_eq!(spec.cycles, Some(2));
    assert_eq!(spec.reward_profiles, vec!["cost_time".to_string()]);
}

#[test]
fn bad_flags_are_rejected() {
    assert!(Cli::try_parse_from(["haas", "run", "--gov-level", "L7"]).is_err());
    assert!(Cli::try_parse_from(["haas", "run", "--strategy", "oracle+maybe"]).is_err());
    assert!(Cli::try_parse_from(["haas", "bench", "nonsense"]).is_err());
    let cli = Cli::try_parse_from(["haas", "bench", "ladder", "--seeds", "11,11"]).unwrap();
    let err = dispatch(cli, &mut Vec::new()).unwrap_err();
    assert!(err.to_string().contains("seeds"), "{err}");
    let cli = Cli::try_parse_from(["haas", "run", "--scenario", "Nowhere"]).unwrap();
    assert!(dispatch(cli, &mut Vec::new()).is_err());
}

#[test]
fn bench_prints_and_exports_tables() {
    let args = ["haas", "bench", "contract", "--seeds", "11,13", "--cycles", "2", "--jobs", "2"];
    let mut stdout = Vec::new();
    dispatch(Cli::try_parse_from(args).unwrap(), &mut stdout).unwrap();
    let text = String::from_utf8(stdout).unwrap();
    assert!(text.starts_with("domain,scenario,strategy,level,"));
    assert_eq!(text.lines().count(), 1 + 12);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("contract.json");
    let store = dir.path().join("store");
    let mut full: Vec<&str> = args.to_vec();
    let (p, s) = (path.to_str().unwrap(), store.to_str().unwrap());
    full.extend(["--format", "json", "--export", p, "--out", s]);
    dispatch(Cli::try_parse_from(full).unwrap(), &mut Vec::new()).unwrap();
    let table = haas_bench::summary::import_json(&path).unwrap();
    assert_eq!(table.rows.len(), 12);
    let ids = haas_bench::store::list(&store).unwrap();
    assert_eq!(ids.len(), 1);
    assert_eq!(haas_bench::store::load_table(&store, &ids[0]).unwrap(), table);
}

#[test]
fn calibrate_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let cli = Cli::try_parse_from([
        "haas", "calibrate", "--candidates", "2", "--seeds", "11", "--search-seed", "5",
        "--out", path.to_str().unwrap(),
    ])
    .unwrap();
    dispatch(cli, &mut Vec::new()).unwrap();
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["candidates"].as_array().unwrap().len(), 2);
    assert_eq!(report["objective"], "cum_regret");
}
