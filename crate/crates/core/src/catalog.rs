//! Task, agent and scenario data model.
//!
//! Every subtask carries a five-dimension cognitive profile (repetitiveness,
//! technical depth, creativity, ambiguity, human interaction). The AI
//! affinity score aggregates the profile into a single 0–1 suitability
//! figure, and the affinity band groups subtasks into human-centric,
//! balanced and AI-centric.
//!
//! Catalogue and scenario documents are JSON files with a top-level
//! `version` and `domain` (catalogues) or `scenarios[]` list. The shipped
//! documents live under `data/` and are compiled into the crate.

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HaasError, Result};
use crate::modes::ShareBounds;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Software,
    Manufacturing,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Software, Domain::Manufacturing];

    /// Task types admissible in this domain.
    pub fn task_types(self) -> &'static [&'static str] {
        match self {
            Domain::Software => &[
                "Requirements Analysis",
                "Architecture Design",
                "Code Generation",
                "Code Review",
                "Testing",
                "Debugging",
                "Refactoring",
                "Documentation",
            ],
            Domain::Manufacturing => &[
                "Machine Operation",
                "Quality Inspection",
                "Predictive Maintenance",
                "Assembly",
                "Logistics",
                "Safety Supervision",
                "Process Programming",
                "Process Optimisation",
            ],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Software => "software",
            Domain::Manufacturing => "manufacturing",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Domain {
    type Err = HaasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "software" | "sw" => Ok(Domain::Software),
            "manufacturing" | "mf" | "mfg" => Ok(Domain::Manufacturing),
            other => Err(HaasError::config("domain", format!("unknown domain `{other}`"))),
        }
    }
}

/// Hard allocation constraint printed on the task card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    #[default]
    None,
    HumanOnly,
    AiOnly,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constraint::None => "none",
            Constraint::HumanOnly => "human_only",
            Constraint::AiOnly => "ai_only",
        })
    }
}

/// Five rubric scores, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CognitiveProfile {
    pub repetitiveness: f64,
    pub technical_depth: f64,
    pub creativity: f64,
    pub ambiguity: f64,
    pub human_interaction: f64,
}

impl CognitiveProfile {
    pub fn new(r: f64, tau: f64, c: f64, a: f64, h: f64) -> Self {
        CognitiveProfile {
            repetitiveness: r,
            technical_depth: tau,
            creativity: c,
            ambiguity: a,
            human_interaction: h,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.repetitiveness,
            self.technical_depth,
            self.creativity,
            self.ambiguity,
            self.human_interaction,
        ]
    }

    /// Complexity proxy κ = (τ + a) / 2.
    pub fn complexity(&self) -> f64 {
        (self.technical_depth + self.ambiguity) / 2.0
    }

    /// Judgment-need proxy j = (a + h) / 2.
    pub fn judgment_need(&self) -> f64 {
        (self.ambiguity + self.human_interaction) / 2.0
    }

    /// Names the first out-of-range dimension, if any.
    pub fn out_of_range(&self) -> Option<(&'static str, f64)> {
        const NAMES: [&str; 5] = [
            "repetitiveness",
            "technical_depth",
            "creativity",
            "ambiguity",
            "human_interaction",
        ];
        NAMES
            .iter()
            .zip(self.as_array())
            .find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(v))
            .map(|(n, v)| (*n, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityWeights {
    pub repetitiveness: f64,
    pub technical_depth: f64,
    pub creativity: f64,
    pub ambiguity: f64,
    pub human_interaction: f64,
}

impl Default for AffinityWeights {
    fn default() -> Self {
        AffinityWeights {
            repetitiveness: 0.35,
            technical_depth: 0.25,
            creativity: 0.20,
            ambiguity: 0.10,
            human_interaction: 0.10,
        }
    }
}

impl AffinityWeights {
    pub fn from_array(w: [f64; 5]) -> Self {
        AffinityWeights {
            repetitiveness: w[0],
            technical_depth: w[1],
            creativity: w[2],
            ambiguity: w[3],
            human_interaction: w[4],
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.repetitiveness,
            self.technical_depth,
            self.creativity,
            self.ambiguity,
            self.human_interaction,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.as_array();
        if let Some(bad) = w.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(HaasError::InvalidWeights(format!("negative or non-finite weight {bad}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(HaasError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}

/// AI affinity: `w_r·r + w_τ·τ + w_c·(1−c) + w_a·(1−a) + w_h·(1−h)`.
///
/// Human affinity is the complement `1 − ai_affinity`.
pub fn ai_affinity(profile: &CognitiveProfile, weights: &AffinityWeights) -> Result<f64> {
    weights.validate()?;
    Ok(affinity_unchecked(profile, weights))
}

pub(crate) fn affinity_unchecked(p: &CognitiveProfile, w: &AffinityWeights) -> f64 {
    w.repetitiveness * p.repetitiveness
        + w.technical_depth * p.technical_depth
        + w.creativity * (1.0 - p.creativity)
        + w.ambiguity * (1.0 - p.ambiguity)
        + w.human_interaction * (1.0 - p.human_interaction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffinityBand {
    HumanCentric,
    Balanced,
    AiCentric,
}

pub const BALANCED_LOWER: f64 = 0.45;
pub const AI_CENTRIC_LOWER: f64 = 0.70;

pub fn affinity_band(alpha: f64) -> AffinityBand {
    if alpha < BALANCED_LOWER {
        AffinityBand::HumanCentric
    } else if alpha < AI_CENTRIC_LOWER {
        AffinityBand::Balanced
    } else {
        AffinityBand::AiCentric
    }
}

/// Scales each weight by `1 + fraction_i` and renormalises to unit sum.
pub fn perturb_weights(weights: &AffinityWeights, fractions: [f64; 5]) -> Result<AffinityWeights> {
    if let Some(f) = fractions.iter().find(|f| !f.is_finite() || f.abs() >= 1.0) {
        return Err(HaasError::InvalidWeights(format!("perturbation fraction {f} outside (-1, 1)")));
    }
    let scaled: Vec<f64> = weights
        .as_array()
        .iter()
        .zip(fractions)
        .map(|(w, f)| w * (1.0 + f))
        .collect();
    if let Some(bad) = scaled.iter().find(|v| **v < 0.0) {
        return Err(HaasError::InvalidWeights(format!("perturbed weight {bad} is negative")));
    }
    let total: f64 = scaled.iter().sum();
    if total <= 0.0 {
        return Err(HaasError::InvalidWeights("perturbed weights sum to zero".into()));
    }
    let mut out = [0.0; 5];
    for (o, s) in out.iter_mut().zip(&scaled) {
        *o = s / total;
    }
    Ok(AffinityWeights::from_array(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub id: String,
    pub name: String,
    pub task_type: String,
    pub domain: Domain,
    pub profile: CognitiveProfile,
    /// Hours.
    pub baseline_duration: f64,
    pub criticality: f64,
    #[serde(default)]
    pub constraint: Constraint,
}

impl Subtask {
    pub fn validate(&self, row: usize) -> Result<()> {
        let err = |reason: String| HaasError::InvalidSubtask {
            row,
            id: self.id.clone(),
            reason,
        };
        if let Some((dim, v)) = self.profile.out_of_range() {
            return Err(err(format!("{dim} = {v} outside [0, 1]")));
        }
        if !self.baseline_duration.is_finite() || self.baseline_duration <= 0.0 {
            return Err(err(format!("baseline_duration {} must be > 0", self.baseline_duration)));
        }
        if !(0.0..=1.0).contains(&self.criticality) {
            return Err(err(format!("criticality {} outside [0, 1]", self.criticality)));
        }
        if !self.domain.task_types().contains(&self.task_type.as_str()) {
            return Err(err(format!(
                "task_type `{}` is not a {} task type",
                self.task_type, self.domain
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SubtaskRow {
    id: String,
    name: String,
    task_type: String,
    profile: CognitiveProfile,
    baseline_duration: f64,
    criticality: f64,
    #[serde(default)]
    constraint: Constraint,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CatalogDocument {
    version: String,
    domain: Domain,
    #[serde(default)]
    subtasks: Vec<SubtaskRow>,
}

/// Parses and validates a catalogue document. An empty document (no bytes,
/// or no `subtasks`) yields an empty list.
pub fn load_catalog(document: &str) -> Result<Vec<Subtask>> {
    if document.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: CatalogDocument = serde_json::from_str(document)?;
    let mut seen = std::collections::BTreeSet::new();
    doc.subtasks
        .into_iter()
        .enumerate()
        .map(|(row, r)| {
            let s = Subtask {
                id: r.id,
                name: r.name,
                task_type: r.task_type,
                domain: doc.domain,
                profile: r.profile,
                baseline_duration: r.baseline_duration,
                criticality: r.criticality,
                constraint: r.constraint,
            };
            s.validate(row)?;
            if !seen.insert(s.id.clone()) {
                return Err(HaasError::InvalidSubtask {
                    row,
                    id: s.id,
                    reason: "duplicate id".into(),
                });
            }
            Ok(s)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Human,
    Ai,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub kind: AgentKind,
    /// Currency per hour.
    pub hourly_rate: f64,
    /// Standard deviation of the quality draw.
    pub quality_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostProfile {
    pub human: AgentProfile,
    pub ai: AgentProfile,
}

impl CostProfile {
    pub fn for_domain(domain: Domain) -> Self {
        let (h, a) = match domain {
            Domain::Software => (50.0, 2.0),
            Domain::Manufacturing => (32.0, 8.0),
        };
        CostProfile {
            human: AgentProfile {
                kind: AgentKind::Human,
                hourly_rate: h,
                quality_noise: 0.07,
            },
            ai: AgentProfile {
                kind: AgentKind::Ai,
                hourly_rate: a,
                quality_noise: 0.04,
            },
        }
    }
}

fn default_initial_fatigue() -> f64 {
    0.10
}

fn default_initial_trust() -> f64 {
    0.70
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanProfile {
    pub initial_skill: f64,
    pub fatigue_resistance: f64,
    pub experience: f64,
    pub process_maturity: f64,
    #[serde(default = "default_initial_fatigue")]
    pub initial_fatigue: f64,
    #[serde(default = "default_initial_trust")]
    pub initial_trust: f64,
}

impl Default for HumanProfile {
    fn default() -> Self {
        HumanProfile {
            initial_skill: 0.70,
            fatigue_resistance: 1.0,
            experience: 0.60,
            process_maturity: 0.60,
            initial_fatigue: default_initial_fatigue(),
            initial_trust: default_initial_trust(),
        }
    }
}

fn one() -> f64 {
    1.0
}

/// Scenario pressure modifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pressure {
    #[serde(default = "one")]
    pub fatigue_rate: f64,
    #[serde(default = "one")]
    pub time_budget: f64,
    /// Task-type sampling weight multipliers; missing types weigh 1.
    #[serde(default)]
    pub mix: BTreeMap<String, f64>,
}

impl Default for Pressure {
    fn default() -> Self {
        Pressure {
            fatigue_rate: 1.0,
            time_budget: 1.0,
            mix: BTreeMap::new(),
        }
    }
}

impl Pressure {
    pub fn mix_weight(&self, task_type: &str) -> f64 {
        self.mix.get(task_type).copied().unwrap_or(1.0)
    }
}

/// Per-scenario override of the reward normalisers (multiples of the
/// subtask baseline duration and of the pure-human cost).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormaliserOverride {
    pub time_factor: f64,
    pub cost_factor: f64,
}

fn default_cycles() -> u32 {
    8
}

fn default_subtasks() -> u32 {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub domain: Domain,
    pub name: String,
    #[serde(default = "default_cycles")]
    pub cycles: u32,
    #[serde(default = "default_subtasks")]
    pub subtasks_per_cycle: u32,
    #[serde(default)]
    pub pressure: Pressure,
    pub cost_profile: CostProfile,
    #[serde(default)]
    pub human_profile: HumanProfile,
    /// Sprint time budget in hours before pressure scaling.
    pub time_budget_hours: f64,
    /// AI hours per sprint before overload accrues.
    pub ai_capacity_hours: f64,
    #[serde(default)]
    pub peer_delta: Option<f64>,
    #[serde(default)]
    pub copilot_ai_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub supervised_human_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub hybrid_trigger: Option<f64>,
    #[serde(default)]
    pub normalisers: Option<NormaliserOverride>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |reason: &str| HaasError::InvalidScenario {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.cycles < 1 {
            return Err(err("cycles must be >= 1"));
        }
        if self.subtasks_per_cycle < 1 {
            return Err(err("subtasks_per_cycle must be >= 1"));
        }
        if !(self.pressure.fatigue_rate > 0.0 && self.pressure.time_budget > 0.0) {
            return Err(err("pressure modifiers must be > 0"));
        }
        if self.pressure.mix.values().any(|w| !(*w > 0.0)) {
            return Err(err("mix weights must be > 0"));
        }
        for t in self.pressure.mix.keys() {
            if !self.domain.task_types().contains(&t.as_str()) {
                return Err(err(&format!("mix names unknown task type `{t}`")));
            }
        }
        let hp = &self.human_profile;
        for (n, v) in [
            ("initial_skill", hp.initial_skill),
            ("experience", hp.experience),
            ("process_maturity", hp.process_maturity),
            ("initial_fatigue", hp.initial_fatigue),
            ("initial_trust", hp.initial_trust),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(err(&format!("human_profile.{n} outside [0, 1]")));
            }
        }
        if !(hp.fatigue_resistance > 0.0) {
            return Err(err("fatigue_resistance must be > 0"));
        }
        if !(self.cost_profile.human.hourly_rate > 0.0 && self.cost_profile.ai.hourly_rate > 0.0) {
            return Err(err("hourly rates must be > 0"));
        }
        if !(self.time_budget_hours > 0.0 && self.ai_capacity_hours > 0.0) {
            return Err(err("time budget and AI capacity must be > 0"));
        }
        self.share_bounds(&ShareBounds::default()).validate()?;
        Ok(())
    }

    /// Share bounds with this scenario's overrides applied.
    pub fn share_bounds(&self, base: &ShareBounds) -> ShareBounds {
        ShareBounds {
            copilot_ai: self.copilot_ai_bounds.unwrap_or(base.copilot_ai),
            supervised_human: self.supervised_human_bounds.unwrap_or(base.supervised_human),
            peer_delta: self.peer_delta.unwrap_or(base.peer_delta),
            hybrid_trigger: self.hybrid_trigger.unwrap_or(base.hybrid_trigger),
        }
    }

    pub fn sprint_time_budget(&self) -> f64 {
        self.time_budget_hours * self.pressure.time_budget
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScenarioDocument {
    version: String,
    scenarios: Vec<ScenarioSpec>,
}

pub fn load_scenarios(document: &str) -> Result<Vec<ScenarioSpec>> {
    if document.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: ScenarioDocument = serde_json::from_str(document)?;
    for s in &doc.scenarios {
        s.validate()?;
    }
    Ok(doc.scenarios)
}

/// Draws one sprint of subtasks from the scenario's domain, weighting each
/// subtask by its task type's mix weight. Draws are with replacement.
pub fn sample_sprint<R: Rng + ?Sized>(
    catalog: &[Subtask],
    scenario: &ScenarioSpec,
    rng: &mut R,
) -> Result<Vec<Subtask>> {
    let pool: Vec<&Subtask> = catalog.iter().filter(|s| s.domain == scenario.domain).collect();
    if pool.is_empty() {
        return Err(HaasError::EmptyCatalog(scenario.domain.to_string()));
    }
    let weights: Vec<f64> = pool
        .iter()
        .map(|s| scenario.pressure.mix_weight(&s.task_type))
        .collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| HaasError::InvalidScenario {
        name: scenario.name.clone(),
        reason: e.to_string(),
    })?;
    Ok((0..scenario.subtasks_per_cycle)
        .map(|_| pool[dist.sample(rng)].clone())
        .collect())
}
