//! Forward-chaining governance rules, the Governance Ladder and the
//! risk/budget autonomy cap.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{AgentKind, Constraint, Domain, HumanProfile, Subtask};
use crate::error::{HaasError, Result};
use crate::modes::{CollaborationMode, ModeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    L0,
    L1,
    L2,
    L3,
    L4,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::L0, Level::L1, Level::L2, Level::L3, Level::L4];

    /// Published (risk, budget) thresholds. L0 has no cap.
    pub fn thresholds(self) -> Option<(f64, f64)> {
        match self {
            Level::L0 => None,
            Level::L1 => Some((0.72, 0.45)),
            Level::L2 => Some((0.62, 0.58)),
            Level::L3 => Some((0.52, 0.68)),
            Level::L4 => Some((0.40, 0.78)),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.index())
    }
}

impl std::str::FromStr for Level {
    type Err = HaasError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "L0" | "0" => Ok(Level::L0),
            "L1" | "1" => Ok(Level::L1),
            "L2" | "2" => Ok(Level::L2),
            "L3" | "3" => Ok(Level::L3),
            "L4" | "4" => Ok(Level::L4),
            _ => Err(HaasError::config(
                "governance_level",
                format!("`{s}` is not one of L0..L4"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainScope {
    Software,
    Manufacturing,
    Both,
}

impl DomainScope {
    pub fn covers(self, d: Domain) -> bool {
        matches!(
            (self, d),
            (DomainScope::Both, _)
                | (DomainScope::Software, Domain::Software)
                | (DomainScope::Manufacturing, Domain::Manufacturing)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleType {
    Hard,
    Mode,
    Cap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    ForceAgent(AgentKind),
    ForceMode(CollaborationMode),
    CapMode(CollaborationMode),
}

/// Conjunction of the populated predicates. An empty condition matches
/// every subtask.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub task_types: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subtask_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Constraint>,
    /// Matches when fatigue is strictly above this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fatigue_above: Option<f64>,
    /// Matches when risk ≥ τ_r or budget < τ_b for the active level.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub risk_budget: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub id: String,
    pub domain_scope: DomainScope,
    pub rule_type: RuleType,
    #[serde(default)]
    pub condition: Condition,
    pub effect: Effect,
    /// Lower fires first; `None` marks a dynamic rule evaluated after all
    /// static rules.
    #[serde(default)]
    pub priority: Option<i32>,
    pub min_level: Level,
}

impl PolicyRule {
    pub fn validate(&self) -> Result<()> {
        let err = |reason: &str| HaasError::InvalidRule {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        let ok = matches!(
            (self.rule_type, self.effect),
            (RuleType::Hard, Effect::ForceAgent(_))
                | (RuleType::Mode, Effect::ForceMode(_))
                | (RuleType::Cap, Effect::CapMode(_))
        );
        if !ok {
            return Err(err("effect does not match rule_type"));
        }
        if let Some(f) = self.condition.fatigue_above {
            if !(0.0..=1.0).contains(&f) {
                return Err(err("fatigue_above outside [0, 1]"));
            }
        }
        if self.id.trim().is_empty() {
            return Err(err("empty id"));
        }
        Ok(())
    }

    fn matches(&self, ctx: &EvalContext<'_>, thresholds: Option<(f64, f64)>) -> bool {
        let s = ctx.subtask;
        let c = &self.condition;
        if !self.domain_scope.covers(s.domain) {
            return false;
        }
        if !c.task_types.is_empty() && !c.task_types.contains(&s.task_type) {
            return false;
        }
        if !c.subtask_names.is_empty() && !c.subtask_names.contains(&s.name) {
            return false;
        }
        if let Some(k) = c.constraint {
            if s.constraint != k {
                return false;
            }
        }
        if let Some(f) = c.fatigue_above {
            if ctx.fatigue <= f {
                return false;
            }
        }
        if c.risk_budget {
            let Some((tau_r, tau_b)) = thresholds else {
                return false;
            };
            if !(ctx.risk >= tau_r || ctx.budget < tau_b) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RulesDocument {
    #[allow(dead_code)]
    version: String,
    rules: Vec<PolicyRule>,
}

/// Parses and validates a rule catalogue document.
pub fn load_rules(document: &str) -> Result<Vec<PolicyRule>> {
    if document.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc: RulesDocument = serde_json::from_str(document)?;
    let mut seen = std::collections::BTreeSet::new();
    for r in &doc.rules {
        r.validate()?;
        if !seen.insert(r.id.clone()) {
            return Err(HaasError::InvalidRule {
                id: r.id.clone(),
                reason: "duplicate id".into(),
            });
        }
    }
    Ok(doc.rules)
}

/// Weights of the risk score and autonomy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiskParams {
    pub risk_complexity: f64,
    pub risk_criticality: f64,
    pub budget_experience: f64,
    pub budget_maturity: f64,
    pub budget_safety: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        RiskParams {
            risk_complexity: 0.5,
            risk_criticality: 0.5,
            budget_experience: 0.45,
            budget_maturity: 0.25,
            budget_safety: 0.30,
        }
    }
}

pub fn risk_score(subtask: &Subtask, p: &RiskParams) -> f64 {
    (p.risk_complexity * subtask.profile.complexity() + p.risk_criticality * subtask.criticality)
        .clamp(0.0, 1.0)
}

pub fn autonomy_budget(profile: &HumanProfile, risk: f64, p: &RiskParams) -> f64 {
    (p.budget_experience * profile.experience
        + p.budget_maturity * profile.process_maturity
        + p.budget_safety * (1.0 - risk))
        .clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DirectiveKind {
    None,
    ForcedAssignment(AgentKind),
    ForcedMode(CollaborationMode),
    Cap(CollaborationMode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GovernanceDirective {
    pub kind: DirectiveKind,
    pub fired_rule_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GovernanceDirective {
    pub fn none() -> Self {
        GovernanceDirective {
            kind: DirectiveKind::None,
            fired_rule_id: None,
            warnings: Vec::new(),
        }
    }

    pub fn feasible_modes(&self) -> ModeSet {
        feasible_modes(self.kind)
    }
}

pub fn feasible_modes(kind: DirectiveKind) -> ModeSet {
    match kind {
        DirectiveKind::None => ModeSet::ALL,
        DirectiveKind::Cap(m) => ModeSet::up_to(m),
        DirectiveKind::ForcedMode(m) => ModeSet::single(m),
        DirectiveKind::ForcedAssignment(AgentKind::Human) => ModeSet::single(CollaborationMode::HumanOnly),
        DirectiveKind::ForcedAssignment(AgentKind::Ai) => ModeSet::single(CollaborationMode::Autonomous),
    }
}

/// One rung of the ladder with its active rules in evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GovernanceLevel {
    pub level: Level,
    pub thresholds: Option<(f64, f64)>,
    /// Static rules sorted by (priority, id), followed by dynamic rules
    /// sorted by id.
    pub rules: Vec<PolicyRule>,
}

impl GovernanceLevel {
    /// Collects the rules with `min_level ≤ level`. Rules with priority 0
    /// apply at every level, L0 included; all other rules need L1 or above.
    pub fn assemble(level: Level, catalogue: &[PolicyRule]) -> Self {
        Self::assemble_with(level, catalogue, level.thresholds())
    }

    pub fn assemble_with(level: Level, catalogue: &[PolicyRule], thresholds: Option<(f64, f64)>) -> Self {
        let active = |r: &&PolicyRule| {
            r.min_level <= level && (level > Level::L0 || r.priority == Some(0))
        };
        let mut statics: Vec<PolicyRule> = catalogue
            .iter()
            .filter(active)
            .filter(|r| r.priority.is_some())
            .cloned()
            .collect();
        statics.sort_by(|a, b| (a.priority, &a.id).cmp(&(b.priority, &b.id)));
        let mut dynamics: Vec<PolicyRule> = catalogue
            .iter()
            .filter(active)
            .filter(|r| r.priority.is_none())
            .cloned()
            .collect();
        dynamics.sort_by(|a, b| a.id.cmp(&b.id));
        statics.extend(dynamics);
        GovernanceLevel {
            level,
            thresholds: if level == Level::L0 { None } else { thresholds },
            rules: statics,
        }
    }

    pub fn contains_rule(&self, id: &str) -> bool {
        self.rules.iter().any(|r| r.id == id)
    }
}

/// Inputs the rules are evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub subtask: &'a Subtask,
    pub fatigue: f64,
    pub risk: f64,
    pub budget: f64,
}

impl<'a> EvalContext<'a> {
    pub fn new(subtask: &'a Subtask, fatigue: f64, profile: &HumanProfile, p: &RiskParams) -> Self {
        let risk = risk_score(subtask, p);
        EvalContext {
            subtask,
            fatigue,
            risk,
            budget: autonomy_budget(profile, risk, p),
        }
    }
}

/// First-match evaluation. Deterministic and side-effect free.
pub fn evaluate(level: &GovernanceLevel, ctx: &EvalContext<'_>) -> GovernanceDirective {
    let mut fired = None;
    for rule in &level.rules {
        if rule.matches(ctx, level.thresholds) {
            fired = Some(rule);
            break;
        }
    }
    let Some(rule) = fired else {
        return GovernanceDirective::none();
    };
    let kind = match rule.effect {
        Effect::ForceAgent(a) => DirectiveKind::ForcedAssignment(a),
        Effect::ForceMode(m) => DirectiveKind::ForcedMode(m),
        Effect::CapMode(m) => DirectiveKind::Cap(m),
    };
    let mut warnings = Vec::new();
    if ctx.subtask.constraint == Constraint::HumanOnly {
        let shadowed = level.rules.iter().find(|r| {
            r.id != rule.id
                && r.condition.fatigue_above.is_some()
                && matches!(
                    r.effect,
                    Effect::ForceMode(CollaborationMode::Autonomous) | Effect::ForceAgent(AgentKind::Ai)
                )
                && r.matches(ctx, level.thresholds)
        });
        if let Some(r) = shadowed {
            warnings.push(format!(
                "rule `{}` would force AI execution of human_only subtask `{}` at fatigue {:.2}; human_only kept",
                r.id, ctx.subtask.id, ctx.fatigue
            ));
        }
    }
    GovernanceDirective {
        kind,
        fired_rule_id: Some(rule.id.clone()),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::CognitiveProfile;
    use crate::library::Library;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn subtask(domain: Domain, task_type: &str, constraint: Constraint) -> Subtask {
        Subtask {
            id: "x".into(),
            name: "x".into(),
            task_type: task_type.into(),
            domain,
            profile: CognitiveProfile::new(0.6, 0.3, 0.3, 0.3, 0.3),
            baseline_duration: 2.0,
            criticality: 0.2,
            constraint,
        }
    }

    fn eval(level: Level, s: &Subtask, fatigue: f64) -> GovernanceDirective {
        let lib = Library::builtin();
        let gl = GovernanceLevel::assemble(level, &lib.rules);
        evaluate(&gl, &EvalContext::new(s, fatigue, &HumanProfile::default(), &RiskParams::default()))
    }

    #[test]
    fn risk_and_budget_examples() {
        let p = RiskParams::default();
        let mut s = subtask(Domain::Software, "Testing", Constraint::None);
        s.profile = CognitiveProfile::new(0.0, 1.0, 0.0, 1.0, 0.0);
        s.criticality = 1.0;
        assert_abs_diff_eq!(risk_score(&s, &p), 1.0, epsilon = 1e-12);
        s.profile = CognitiveProfile::new(0.0, 0.55, 0.0, 0.55, 0.0);
        s.criticality = 0.80;
        assert_abs_diff_eq!(risk_score(&s, &p), 0.675, epsilon = 1e-12);
        s.profile = CognitiveProfile::new(0.0, 0.0, 0.0, 0.0, 0.0);
        s.criticality = 0.0;
        assert_abs_diff_eq!(risk_score(&s, &p), 0.0, epsilon = 1e-12);

        let hp = |e, m| HumanProfile {
            experience: e,
            process_maturity: m,
            ..HumanProfile::default()
        };
        assert_abs_diff_eq!(autonomy_budget(&hp(1.0, 1.0), 0.0, &p), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(autonomy_budget(&hp(0.5, 0.5), 0.5, &p), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(autonomy_budget(&hp(0.0, 0.0), 1.0, &p), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn safety_supervision_forced_human_at_l4() {
        let s = subtask(Domain::Manufacturing, "Safety Supervision", Constraint::None);
        let d = eval(Level::L4, &s, 0.2);
        assert_eq!(d.kind, DirectiveKind::ForcedAssignment(AgentKind::Human));
        assert_eq!(d.fired_rule_id.as_deref(), Some("mfg_safety_human"));
    }

    #[test]
    fn architecture_priority_beats_judgment_rule() {
        let s = subtask(Domain::Software, "Architecture Design", Constraint::None);
        let d = eval(Level::L4, &s, 0.2);
        assert_eq!(d.kind, DirectiveKind::ForcedAssignment(AgentKind::Human));
        assert_eq!(d.fired_rule_id.as_deref(), Some("sw_architecture_human"));
        let d3 = eval(Level::L3, &s, 0.2);
        assert_eq!(d3.kind, DirectiveKind::ForcedMode(CollaborationMode::Supervised));
        assert_eq!(d3.fired_rule_id.as_deref(), Some("sw_high_judgment_sup"));
    }

    #[test]
    fn l0_is_empty_apart_from_task_cards() {
        let s = subtask(Domain::Software, "Code Generation", Constraint::None);
        assert_eq!(eval(Level::L0, &s, 0.2), GovernanceDirective::none());
        assert_eq!(eval(Level::L0, &s, 0.99).kind, DirectiveKind::None);
        let h = subtask(Domain::Manufacturing, "Safety Supervision", Constraint::HumanOnly);
        assert_eq!(
            eval(Level::L0, &h, 0.2).kind,
            DirectiveKind::ForcedAssignment(AgentKind::Human)
        );
        let a = subtask(Domain::Manufacturing, "Logistics", Constraint::AiOnly);
        assert_eq!(eval(Level::L0, &a, 0.2).kind, DirectiveKind::ForcedAssignment(AgentKind::Ai));
    }

    #[test]
    fn critical_fatigue_forces_autonomous() {
        let s = subtask(Domain::Software, "Code Generation", Constraint::None);
        let d = eval(Level::L1, &s, 0.95);
        assert_eq!(d.kind, DirectiveKind::ForcedMode(CollaborationMode::Autonomous));
        assert_eq!(d.fired_rule_id.as_deref(), Some(crate::library::CRITICAL_FATIGUE_RULE));
        assert_eq!(eval(Level::L1, &s, 0.90).kind, DirectiveKind::None);
    }

    #[test]
    fn human_only_card_wins_over_fatigue_with_warning() {
        let s = subtask(Domain::Manufacturing, "Safety Supervision", Constraint::HumanOnly);
        let d = eval(Level::L2, &s, 0.97);
        assert_eq!(d.kind, DirectiveKind::ForcedAssignment(AgentKind::Human));
        assert_eq!(d.warnings.len(), 1);
        assert!(eval(Level::L2, &s, 0.5).warnings.is_empty());
    }

    #[test]
    fn cap_fires_on_risk_or_budget() {
        let mut s = subtask(Domain::Software, "Code Generation", Constraint::None);
        s.profile = CognitiveProfile::new(0.2, 0.9, 0.5, 0.9, 0.2);
        s.criticality = 0.9;
        let d = eval(Level::L1, &s, 0.2);
        assert_eq!(d.kind, DirectiveKind::Cap(CollaborationMode::Supervised));
        assert_eq!(d.fired_rule_id.as_deref(), Some("exp_autonomy_cap"));
        assert_eq!(d.feasible_modes().len(), 4);
        assert!(!d.feasible_modes().contains(CollaborationMode::Autonomous));
    }

    #[test]
    fn feasible_sets() {
        assert_eq!(feasible_modes(DirectiveKind::None).len(), 5);
        assert_eq!(
            feasible_modes(DirectiveKind::ForcedMode(CollaborationMode::Supervised)),
            ModeSet::single(CollaborationMode::Supervised)
        );
        let cap = feasible_modes(DirectiveKind::Cap(CollaborationMode::Supervised));
        assert_eq!(
            cap.iter().collect::<Vec<_>>(),
            vec![
                CollaborationMode::HumanOnly,
                CollaborationMode::Copilot,
                CollaborationMode::Peer,
                CollaborationMode::Supervised
            ]
        );
        assert_eq!(
            feasible_modes(DirectiveKind::ForcedAssignment(AgentKind::Ai)),
            ModeSet::single(CollaborationMode::Autonomous)
        );
    }

    #[test]
    fn mismatched_effect_rejected() {
        let doc = r#"{"version":"1","rules":[{"id":"bad","domain_scope":"both","rule_type":"hard",
            "effect":{"cap_mode":"Supervised"},"priority":3,"min_level":"L1"}]}"#;
        assert!(matches!(load_rules(doc), Err(HaasError::InvalidRule { .. })));
    }

    #[test]
    fn equal_priorities_break_by_id() {
        let mk = |id: &str, m| PolicyRule {
            id: id.into(),
            domain_scope: DomainScope::Both,
            rule_type: RuleType::Mode,
            condition: Condition::default(),
            effect: Effect::ForceMode(m),
            priority: Some(30),
            min_level: Level::L1,
        };
        let rules = vec![mk("zeta", CollaborationMode::Peer), mk("alpha", CollaborationMode::Copilot)];
        let gl = GovernanceLevel::assemble(Level::L1, &rules);
        let s = subtask(Domain::Software, "Testing", Constraint::None);
        let d = evaluate(&gl, &EvalContext::new(&s, 0.1, &HumanProfile::default(), &RiskParams::default()));
        assert_eq!(d.fired_rule_id.as_deref(), Some("alpha"));
    }

    fn any_subtask() -> impl Strategy<Value = Subtask> {
        let lib = Library::builtin();
        let n = lib.subtasks.len();
        (0..n, 0.0f64..=1.0).prop_map(move |(i, crit)| {
            let mut s = Library::builtin().subtasks[i].clone();
            s.criticality = crit;
            s
        })
    }

    proptest! {
        #[test]
        fn feasible_set_shrinks_with_level(s in any_subtask(), f in 0.0f64..=1.0) {
            let mut prev = usize::MAX;
            for level in Level::ALL {
                let n = eval(level, &s, f).feasible_modes().len();
                prop_assert!(n <= prev, "{level}: {n} > {prev}");
                prev = n;
            }
        }

        #[test]
        fn evaluation_is_deterministic_and_auditable(s in any_subtask(), f in 0.0f64..=1.0, li in 0usize..5) {
            let lib = Library::builtin();
            let gl = GovernanceLevel::assemble(Level::ALL[li], &lib.rules);
            let ctx = EvalContext::new(&s, f, &HumanProfile::default(), &RiskParams::default());
            let a = evaluate(&gl, &ctx);
            prop_assert_eq!(&a, &evaluate(&gl, &ctx));
            prop_assert_eq!(a.fired_rule_id.is_some(), a.kind != DirectiveKind::None);
            if let Some(id) = &a.fired_rule_id {
                prop_assert!(gl.contains_rule(id));
            }
        }

        #[test]
        fn l0_only_task_cards(s in any_subtask(), f in 0.0f64..=1.0) {
            let d = eval(Level::L0, &s, f);
            match s.constraint {
                Constraint::None => prop_assert_eq!(d.kind, DirectiveKind::None),
                _ => prop_assert!(matches!(d.kind, DirectiveKind::ForcedAssignment(_))),
            }
        }
    }
}
