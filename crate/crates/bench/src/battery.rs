//! Parallel execution of run grids with a deterministic ordered merge.

use haas_core::{run, Library, RunConfig, RunResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibrate::{self, SearchSpec};
use crate::error::{BenchError, Result};
use crate::spec::{BatterySpec, Program};
use crate::summary::SummaryTable;
use crate::store;

/// Short label identifying one run in error messages.
pub fn describe(c: &RunConfig) -> String {
    format!(
        "{} / {} / {} / seed {} / {} / ablation {:?}",
        c.scenario, c.strategy, c.governance_level, c.seed, c.reward_profile, c.ablation
    )
}

/// Runs every config on a pool of `jobs` threads (0 = one per core). The
/// output order follows the input order; the first failing config in that
/// order aborts the batch.
pub fn execute(configs: &[RunConfig], lib: &Library, jobs: usize) -> Result<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::spec("jobs", e.to_string()))?;
    let results: Vec<haas_core::Result<RunResult>> = pool.install(|| configs.par_iter().map(|c| run(c, lib)).collect());
    results
        .into_iter()
        .zip(configs)
        .map(|(r, c)| {
            r.map_err(|source| BenchError::Run {
                label: describe(c),
                source,
            })
        })
        .collect()
}

/// Everything a battery produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryOutput {
    pub id: String,
    pub spec: BatterySpec,
    pub table: SummaryTable,
    pub runs: Vec<RunResult>,
}

/// Content hash of the battery spec, used as its id.
pub fn battery_id(spec: &BatterySpec) -> String {
    let doc = serde_json::to_vec(spec).expect("battery specs serialise");
    let digest = Sha256::digest(&doc);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Executes the program's grid and summarises it. Persists under
/// `spec.out` when set.
pub fn run_battery(spec: &BatterySpec, lib: &Library, jobs: usize) -> Result<BatteryOutput> {
    spec.validate(lib)?;
    let (table, runs) = if spec.program == Program::Calibrate {
        let search = SearchSpec::from_battery(spec);
        let outcome = calibrate::search(&search, lib, jobs)?;
        (outcome.table, outcome.runs)
    } else {
        let cells = spec.cells(lib)?;
        let configs: Vec<RunConfig> = cells
            .iter()
            .flat_map(|c| {
                spec.seeds.iter().map(move |&s| {
                    let mut cfg = c.config.clone();
                    cfg.seed = s;
                    cfg
                })
            })
            .collect();
        let runs = execute(&configs, lib, jobs)?;
        (SummaryTable::build(spec.program, &cells, &spec.seeds, &runs), runs)
    };
    let out = BatteryOutput {
        id: battery_id(spec),
        spec: spec.clone(),
        table,
        runs,
    };
    if let Some(dir) = &spec.out {
        store::persist(&out, dir)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use haas_core::StrategyId;

    #[test]
    fn single_run_battery_equals_its_aggregate() {
        let lib = Library::builtin();
        let mut spec = BatterySpec::new(Program::StrategyTable, &lib);
        spec.seeds = vec![11];
        spec.scenarios = vec!["Standard Sprint".into()];
        spec.strategies = vec!["linucb+on".parse::<StrategyId>().unwrap()];
        let out = run_battery(&spec, &lib, 1).unwrap();
        assert_eq!(out.table.rows.len(), 1);
        let row = &out.table.rows[0];
        for (i, c) in out.table.columns.iter().enumerate() {
            let v = match c.as_str() {
                "acceptable_rate" => f64::from(u8::from(out.runs[0].screens.acceptable)),
                "reasonable_rate" => f64::from(u8::from(out.runs[0].screens.reasonable)),
                "responsible_rate" => f64::from(u8::from(out.runs[0].screens.responsible)),
                _ => out.runs[0].aggregate.column(c).unwrap(),
            };
            assert_eq!(row.mean[i], v, "{c}");
        }
        assert!(out.table.wilcoxon.is_empty());
    }

    #[test]
    fn failure_names_the_config() {
        let lib = Library::builtin();
        let mut cfg = RunConfig::new("Standard Sprint", "random+on".parse().unwrap(), 3);
        cfg.cycles = Some(0);
        let ok = RunConfig::new("Standard Sprint", "random+on".parse().unwrap(), 5);
        let err = execute(&[ok, cfg], &lib, 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seed 3"), "{msg}");
        assert_eq!(err.field(), Some("cycles"));
    }

    #[test]
    fn id_ignores_output_path() {
        let lib = Library::builtin();
        let a = BatterySpec::new(Program::Ladder, &lib);
        let mut b = a.clone();
        b.out = Some("/tmp/elsewhere".into());
        assert_eq!(battery_id(&a), battery_id(&b));
        b.seeds.pop();
        assert_ne!(battery_id(&a), battery_id(&b));
    }
}
