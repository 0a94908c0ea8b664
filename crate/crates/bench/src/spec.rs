//! Battery specifications and the run grid each program expands to.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use haas_core::catalog::perturb_weights;
use haas_core::outcomes::RewardProfile;
use haas_core::{Ablation, Algorithm, Domain, Level, Library, ModelParams, RunConfig, StrategyId};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Program {
    StrategyTable,
    Ladder,
    Portability,
    LongHorizon,
    Ablation,
    Contract,
    WeightSensitivity,
    Calibrate,
    Dispersion,
}

impl Program {
    pub const ALL: [Program; 9] = [
        Program::StrategyTable,
        Program::Ladder,
        Program::Portability,
        Program::LongHorizon,
        Program::Ablation,
        Program::Contract,
        Program::WeightSensitivity,
        Program::Calibrate,
        Program::Dispersion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Program::StrategyTable => "strategy_table",
            Program::Ladder => "ladder",
            Program::Portability => "portability",
            Program::LongHorizon => "long_horizon",
            Program::Ablation => "ablation",
            Program::Contract => "contract",
            Program::WeightSensitivity => "weight_sensitivity",
            Program::Calibrate => "calibrate",
            Program::Dispersion => "dispersion",
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Program {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_").to_ascii_lowercase();
        Program::ALL
            .into_iter()
            .find(|p| p.as_str() == key)
            .ok_or_else(|| BenchError::spec("program", format!("unknown program `{s}`")))
    }
}

/// First 30 primes from 11 (11 … 139).
pub fn default_seeds() -> Vec<u64> {
    (11u64..)
        .filter(|n| (2..*n).take_while(|d| d * d <= *n).all(|d| n % d != 0))
        .take(30)
        .collect()
}

/// The strategies compared in the main strategy table.
pub fn strategy_roster() -> Vec<StrategyId> {
    use Algorithm::*;
    [
        (AiOnly, false),
        (Oracle, true),
        (Linucb, false),
        (Linucb, true),
        (Ucb1, false),
        (Ucb1, true),
        (Thompson, true),
        (AffinityHeuristic, true),
        (HumanScheduler, true),
        (Random, true),
        (FixedHuman, false),
    ]
    .into_iter()
    .map(|(a, p)| StrategyId::new(a, p))
    .collect()
}

/// Strategies ranked in the weight-sensitivity program.
pub fn sensitivity_roster() -> Vec<StrategyId> {
    use Algorithm::*;
    [
        (AiOnly, false),
        (Linucb, false),
        (AffinityHeuristic, true),
        (Random, true),
        (FixedHuman, false),
    ]
    .into_iter()
    .map(|(a, p)| StrategyId::new(a, p))
    .collect()
}

pub const BASE_VARIANT: &str = "base";

const WEIGHT_NAMES: [&str; 5] = ["repetitiveness", "technical_depth", "creativity", "ambiguity", "human_interaction"];

/// Relative change applied to one affinity weight per sensitivity variant.
pub const WEIGHT_PERTURBATION: f64 = 0.30;

/// Variant labels of the weight-sensitivity program: the base weights, then
/// each weight raised and lowered.
pub fn weight_variants() -> Vec<String> {
    let mut v = vec![BASE_VARIANT.to_string()];
    for name in WEIGHT_NAMES {
        v.push(format!("{name}+30%"));
        v.push(format!("{name}-30%"));
    }
    v
}

fn apply_variant(params: &ModelParams, variant: &str) -> Result<ModelParams> {
    if variant == BASE_VARIANT {
        return Ok(*params);
    }
    let (idx, sign) = WEIGHT_NAMES
        .iter()
        .enumerate()
        .find_map(|(i, n)| {
            let rest = variant.strip_prefix(n)?;
            match rest {
                "+30%" => Some((i, 1.0)),
                "-30%" => Some((i, -1.0)),
                _ => None,
            }
        })
        .ok_or_else(|| BenchError::spec("variant", format!("unknown variant `{variant}`")))?;
    let mut fractions = [0.0; 5];
    fractions[idx] = sign * WEIGHT_PERTURBATION;
    let mut p = *params;
    p.affinity = perturb_weights(&params.affinity, fractions)?;
    Ok(p)
}

fn default_candidates() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub program: Program,
    pub seeds: Vec<u64>,
    pub scenarios: Vec<String>,
    pub strategies: Vec<StrategyId>,
    pub levels: Vec<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u32>,
    pub reward_profiles: Vec<String>,
    pub ablations: Vec<String>,
    /// Number of calibration candidates, including the base configuration.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default)]
    pub params: ModelParams,
    /// Directory batteries are persisted under; not part of the battery id.
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// One row of the run grid: the row key plus a config whose seed is filled
/// in per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub key: RowKey,
    pub config: RunConfig,
}

/// Identity of a summary row.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub domain: Domain,
    pub scenario: String,
    pub strategy: StrategyId,
    /// Level the policy engine ran at.
    pub level: Level,
    pub ablation: String,
    pub reward_profile: String,
    pub variant: String,
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}/{}/{}/{}/{}",
            self.domain, self.scenario, self.strategy, self.level, self.ablation, self.reward_profile, self.variant
        )
    }
}

impl BatterySpec {
    /// The default grid of a program.
    pub fn new(program: Program, lib: &Library) -> Self {
        let standard = vec!["Standard Sprint".to_string(), "Standard Production".to_string()];
        let linucb_on = vec![StrategyId::new(Algorithm::Linucb, true)];
        let all_levels = Level::ALL.to_vec();
        let ten = default_seeds()[..10].to_vec();
        let mut spec = BatterySpec {
            program,
            seeds: default_seeds(),
            scenarios: standard,
            strategies: linucb_on.clone(),
            levels: vec![Level::L2],
            cycles: None,
            reward_profiles: vec!["four_outcome".into()],
            ablations: vec!["full".into()],
            candidates: default_candidates(),
            params: ModelParams::default(),
            out: None,
        };
        match program {
            Program::StrategyTable => spec.strategies = strategy_roster(),
            Program::Ladder => spec.levels = all_levels,
            Program::Portability => {
                spec.seeds = ten;
                spec.scenarios = lib.scenarios.iter().map(|s| s.name.clone()).collect();
                spec.levels = all_levels;
            }
            Program::LongHorizon => {
                spec.cycles = Some(16);
                spec.levels = all_levels;
            }
            Program::Ablation => {
                spec.seeds = ten;
                spec.ablations = Ablation::NAMES.iter().map(|s| s.to_string()).collect();
            }
            Program::Contract => {
                spec.scenarios = vec!["Standard Production".into()];
                spec.reward_profiles = RewardProfile::PRESETS.iter().map(|s| s.to_string()).collect();
                spec.strategies = vec![
                    StrategyId::new(Algorithm::AiOnly, false),
                    StrategyId::new(Algorithm::Linucb, false),
                    StrategyId::new(Algorithm::Linucb, true),
                    StrategyId::new(Algorithm::AffinityHeuristic, true),
                ];
            }
            Program::WeightSensitivity => {
                spec.seeds = ten;
                spec.strategies = sensitivity_roster();
            }
            Program::Calibrate => spec.seeds = ten,
            Program::Dispersion => {
                spec.strategies = vec![
                    StrategyId::new(Algorithm::AiOnly, false),
                    StrategyId::new(Algorithm::Linucb, false),
                ];
            }
        }
        spec
    }

    /// Keeps only the scenarios of one domain.
    pub fn restrict_domain(&mut self, domain: Domain, lib: &Library) {
        self.scenarios
            .retain(|s| lib.scenario(s).map(|sc| sc.domain == domain).unwrap_or(true));
    }

    pub fn variants(&self) -> Vec<String> {
        match self.program {
            Program::WeightSensitivity => weight_variants(),
            _ => vec![BASE_VARIANT.to_string()],
        }
    }

    pub fn validate(&self, lib: &Library) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(BenchError::spec("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(BenchError::spec("seeds", "seeds must be distinct"));
        }
        for (field, empty) in [
            ("scenarios", self.scenarios.is_empty()),
            ("strategies", self.strategies.is_empty()),
            ("levels", self.levels.is_empty()),
            ("reward_profiles", self.reward_profiles.is_empty()),
            ("ablations", self.ablations.is_empty()),
        ] {
            if empty {
                return Err(BenchError::spec(field, "must not be empty"));
            }
        }
        if self.program == Program::Calibrate && self.candidates == 0 {
            return Err(BenchError::spec("candidates", "at least one candidate is required"));
        }
        for s in &self.scenarios {
            lib.scenario(s)?;
        }
        for name in &self.ablations {
            Ablation::named(name)?;
        }
        self.params.validate()?;
        for c in self.cells(lib)? {
            c.config.validate(lib)?;
        }
        Ok(())
    }

    /// Expands the grid in a fixed order: scenario, strategy, level, reward
    /// profile, ablation, variant. Cells whose key repeats an earlier one
    /// (policies-off strategies across levels) are dropped.
    pub fn cells(&self, lib: &Library) -> Result<Vec<Cell>> {
        let mut out: Vec<Cell> = Vec::new();
        let variants = self.variants();
        for scenario in &self.scenarios {
            let spec = lib.scenario(scenario)?;
            for strategy in &self.strategies {
                for level in &self.levels {
                    for profile in &self.reward_profiles {
                        for ablation in &self.ablations {
                            for variant in &variants {
                                let mut config = RunConfig::new(&spec.name, *strategy, 0);
                                config.governance_level = *level;
                                config.cycles = self.cycles;
                                config.reward_profile = profile.clone();
                                config.ablation = Ablation::named(ablation)?;
                                config.params = apply_variant(&self.params, variant)?;
                                let key = RowKey {
                                    domain: spec.domain,
                                    scenario: spec.name.clone(),
                                    strategy: *strategy,
                                    level: config.effective_level(),
                                    ablation: ablation.clone(),
                                    reward_profile: profile.clone(),
                                    variant: variant.clone(),
                                };
                                if out.iter().all(|c| c.key != key) {
                                    out.push(Cell { key, config });
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}
