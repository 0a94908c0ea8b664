//! Shipped catalogues, scenarios and rules, plus loading from disk.

use std::path::Path;

use serde::Serialize;

use crate::catalog::{load_catalog, load_scenarios, Domain, ScenarioSpec, Subtask};
use crate::error::{HaasError, Result};
use crate::policy::{load_rules, PolicyRule};

pub const SOFTWARE_CATALOG: &str = include_str!("../data/software.json");
pub const MANUFACTURING_CATALOG: &str = include_str!("../data/manufacturing.json");
pub const SCENARIOS: &str = include_str!("../data/scenarios.json");
pub const RULES: &str = include_str!("../data/rules.json");

pub const CRITICAL_FATIGUE_RULE: &str = "critical_fatigue_autonomous";
pub const AUTONOMY_CAP_RULE: &str = "exp_autonomy_cap";

/// Everything a run needs besides its configuration. Immutable after load.
#[derive(Debug, Clone, Serialize)]
pub struct Library {
    pub subtasks: Vec<Subtask>,
    pub scenarios: Vec<ScenarioSpec>,
    pub rules: Vec<PolicyRule>,
}

impl Library {
    pub fn builtin() -> Self {
        let mut subtasks = load_catalog(SOFTWARE_CATALOG).expect("shipped software catalogue");
        subtasks.extend(load_catalog(MANUFACTURING_CATALOG).expect("shipped manufacturing catalogue"));
        Library {
            subtasks,
            scenarios: load_scenarios(SCENARIOS).expect("shipped scenarios"),
            rules: load_rules(RULES).expect("shipped rules"),
        }
    }

    /// Shipped library with any of the parts replaced from files. A catalogue
    /// file replaces only the domain it declares.
    pub fn with_overrides(
        catalogs: &[&Path],
        scenarios: Option<&Path>,
        rules: Option<&Path>,
    ) -> Result<Self> {
        let mut lib = Library::builtin();
        for path in catalogs {
            let rows = load_catalog(&read(path)?)?;
            let domains: Vec<Domain> = rows.iter().map(|s| s.domain).collect();
            lib.subtasks.retain(|s| !domains.contains(&s.domain));
            lib.subtasks.extend(rows);
        }
        if let Some(p) = scenarios {
            lib.scenarios = load_scenarios(&read(p)?)?;
        }
        if let Some(p) = rules {
            lib.rules = load_rules(&read(p)?)?;
        }
        Ok(lib)
    }

    pub fn scenario(&self, name: &str) -> Result<&ScenarioSpec> {
        self.scenarios
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| HaasError::UnknownScenario(name.to_string()))
    }

    pub fn subtask(&self, key: &str) -> Result<&Subtask> {
        self.subtasks
            .iter()
            .find(|s| s.id == key)
            .or_else(|| self.subtasks.iter().find(|s| s.name.eq_ignore_ascii_case(key)))
            .ok_or_else(|| HaasError::UnknownSubtask(key.to_string()))
    }

    pub fn domain_subtasks(&self, d: Domain) -> impl Iterator<Item = &Subtask> {
        self.subtasks.iter().filter(move |s| s.domain == d)
    }

    /// The standard scenario of a domain.
    pub fn standard(&self, d: Domain) -> Result<&ScenarioSpec> {
        self.scenario(match d {
            Domain::Software => "Standard Sprint",
            Domain::Manufacturing => "Standard Production",
        })
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| HaasError::Io {
        path: path.display().to_string(),
        source,
    })
}
