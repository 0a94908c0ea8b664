//! The closed execution loop for one seeded run, and the read-only what-if
//! preview.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{affinity_unchecked, sample_sprint, AgentKind, Constraint, ScenarioSpec, Subtask};
use crate::error::{HaasError, Result};
use crate::humanstate::HumanState;
use crate::learners::{Algorithm, Allocator, Decision, Selection, StrategyId};
use crate::library::Library;
use crate::metrics::{compute_kpis, screens, RunAggregate, ScreenFlags, SprintKpis};
use crate::modes::{instantiate_mode, mode_allowed, AllocationSpec, CollaborationMode, ModeSet, ShareBounds};
use crate::outcomes::{
    counterfactual_pure, execute_with_state, is_high_value, reward, wellbeing, wellbeing_signals, ExecContext,
    ExecutionOutcome, NoiseDraws, Normalisers, RewardProfile, Trace, WellbeingSignals,
};
use crate::params::ModelParams;
use crate::policy::{evaluate, DirectiveKind, Effect, EvalContext, GovernanceDirective, GovernanceLevel, Level};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub no_policy: bool,
    pub no_fatigue: bool,
    pub no_trust: bool,
    pub no_deskilling: bool,
}

impl Ablation {
    pub const NAMES: [&'static str; 5] = ["full", "no_policy", "no_trust", "no_deskilling", "no_fatigue"];

    pub fn named(name: &str) -> Result<Self> {
        let mut a = Ablation::default();
        match name {
            "full" | "none" => {}
            "no_policy" => a.no_policy = true,
            "no_fatigue" => a.no_fatigue = true,
            "no_trust" => a.no_trust = true,
            "no_deskilling" => a.no_deskilling = true,
            _ => return Err(HaasError::config("ablation", format!("unknown ablation `{name}`"))),
        }
        Ok(a)
    }
}

fn default_level() -> Level {
    Level::L2
}

fn default_reward_profile() -> String {
    "four_outcome".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: String,
    pub strategy: StrategyId,
    /// Level applied when the strategy runs with policies on.
    #[serde(default = "default_level")]
    pub governance_level: Level,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycles: Option<u32>,
    #[serde(default = "default_reward_profile")]
    pub reward_profile: String,
    #[serde(default)]
    pub ablation: Ablation,
    /// Level whose rules the violation audit uses; defaults to the run's own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit_level: Option<Level>,
    #[serde(default)]
    pub params: ModelParams,
}

impl RunConfig {
    pub fn new(scenario: &str, strategy: StrategyId, seed: u64) -> Self {
        RunConfig {
            scenario: scenario.to_string(),
            strategy,
            governance_level: default_level(),
            seed,
            cycles: None,
            reward_profile: default_reward_profile(),
            ablation: Ablation::default(),
            audit_level: None,
            params: ModelParams::default(),
        }
    }

    /// Level the policy engine runs at.
    pub fn effective_level(&self) -> Level {
        if !self.strategy.policies || self.ablation.no_policy {
            Level::L0
        } else {
            self.governance_level
        }
    }

    pub fn reward_weights(&self) -> Result<RewardProfile> {
        if self.reward_profile == "custom" {
            Ok(self.params.reward)
        } else {
            RewardProfile::preset(&self.reward_profile)
        }
    }

    pub fn validate(&self, lib: &Library) -> Result<()> {
        let scenario = lib.scenario(&self.scenario)?;
        if self.cycles == Some(0) {
            return Err(HaasError::config("cycles", "must be >= 1"));
        }
        self.params.validate()?;
        self.reward_weights()?.validate()?;
        let level = GovernanceLevel::assemble(self.effective_level(), &lib.rules);
        check_conflicts(&level, lib.domain_subtasks(scenario.domain))?;
        if lib.domain_subtasks(scenario.domain).next().is_none() {
            return Err(HaasError::EmptyCatalog(scenario.domain.to_string()));
        }
        Ok(())
    }
}

/// Rejects rule sets in which a forcing rule can pre-empt a task-card
/// constraint with an incompatible mode.
pub fn check_conflicts<'a>(level: &GovernanceLevel, subtasks: impl Iterator<Item = &'a Subtask>) -> Result<()> {
    for s in subtasks.filter(|s| s.constraint != Constraint::None) {
        for rule in &level.rules {
            let c = &rule.condition;
            let static_match = rule.domain_scope.covers(s.domain)
                && (c.task_types.is_empty() || c.task_types.contains(&s.task_type))
                && (c.subtask_names.is_empty() || c.subtask_names.contains(&s.name))
                && c.constraint.is_none_or(|k| k == s.constraint);
            if !static_match {
                continue;
            }
            let forced = match rule.effect {
                Effect::ForceMode(m) => Some(m),
                Effect::ForceAgent(AgentKind::Human) => Some(CollaborationMode::HumanOnly),
                Effect::ForceAgent(AgentKind::Ai) => Some(CollaborationMode::Autonomous),
                Effect::CapMode(_) => None,
            };
            let dynamic = c.fatigue_above.is_some() || c.risk_budget;
            match forced {
                Some(m) if !mode_allowed(m, s.constraint) => {
                    // Fatigue overrides of human_only are resolved at run time.
                    if c.fatigue_above.is_some() && s.constraint == Constraint::HumanOnly {
                        continue;
                    }
                    return Err(HaasError::ConstraintConflict {
                        mode: m,
                        subtask: s.id.clone(),
                        constraint: format!("{} (rule `{}`)", s.constraint, rule.id),
                    });
                }
                Some(_) if !dynamic => break,
                _ => {}
            }
        }
    }
    Ok(())
}

/// Independent child streams derived from the run seed.
pub struct StreamPlan {
    pub task_sampling: ChaCha8Rng,
    pub human_noise: ChaCha8Rng,
    pub ai_noise: ChaCha8Rng,
    pub bandit_sampling: ChaCha8Rng,
}

impl StreamPlan {
    pub const LABELS: [&'static str; 4] = ["task_sampling", "human_noise", "ai_noise", "bandit_sampling"];

    pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(label.as_bytes());
        ChaCha8Rng::from_seed(h.finalize().into())
    }

    pub fn new(seed: u64) -> Self {
        StreamPlan {
            task_sampling: Self::stream(seed, "task_sampling"),
            human_noise: Self::stream(seed, "human_noise"),
            ai_noise: Self::stream(seed, "ai_noise"),
            bandit_sampling: Self::stream(seed, "bandit_sampling"),
        }
    }
}

/// Everything that happened to one subtask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationRecord {
    pub index: u32,
    pub sprint: u32,
    pub subtask_id: String,
    pub subtask_name: String,
    pub task_type: String,
    pub alpha_ai: f64,
    pub risk: f64,
    pub budget: f64,
    pub high_value: bool,
    pub directive: GovernanceDirective,
    pub feasible: ModeSet,
    pub warm_start: bool,
    /// The strategy's fixed preference was infeasible and was replaced.
    pub overridden: bool,
    /// The mode is outside the feasible set of the audit level.
    pub violation: bool,
    pub allocation: AllocationSpec,
    pub draws: NoiseDraws,
    pub outcome: ExecutionOutcome,
    pub t_bar: f64,
    pub c_bar: f64,
    pub signals: WellbeingSignals,
    pub wellbeing: f64,
    pub reward: f64,
    pub cf_human_reward: f64,
    pub cf_ai_reward: f64,
    pub regret: f64,
    pub cum_regret: f64,
    pub state: HumanState,
}

impl AllocationRecord {
    pub fn mode(&self) -> CollaborationMode {
        self.allocation.mode
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    pub domain: crate::catalog::Domain,
    pub level: Level,
    pub records: Vec<AllocationRecord>,
    pub sprints: Vec<SprintKpis>,
    pub aggregate: RunAggregate,
    pub screens: ScreenFlags,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// One evaluated mode: allocation, outcome, post-state and reward.
struct Evaluated {
    alloc: AllocationSpec,
    outcome: ExecutionOutcome,
    next: HumanState,
    signals: WellbeingSignals,
    wellbeing: f64,
    reward: f64,
    t_bar: f64,
    c_bar: f64,
}

struct Step<'a> {
    subtask: &'a Subtask,
    state: &'a HumanState,
    ctx: ExecContext<'a>,
    bounds: &'a ShareBounds,
    params: &'a ModelParams,
    profile: &'a RewardProfile,
    norm: Normalisers,
    draws: NoiseDraws,
    history: &'a [Trace],
    sprint: &'a [Trace],
    high_value: bool,
}

impl Step<'_> {
    fn finish(&self, alloc: AllocationSpec, outcome: ExecutionOutcome, next: HumanState) -> Evaluated {
        let trace = Trace {
            mode: alloc.mode,
            high_value: self.high_value,
            relief: outcome.relief,
        };
        let signals = wellbeing_signals(
            next.fatigue,
            next.cumulative_deskilling,
            self.history,
            self.sprint,
            &trace,
            &self.params.wellbeing,
        );
        let w = wellbeing(&signals, &self.params.wellbeing);
        Evaluated {
            alloc,
            outcome,
            next,
            signals,
            wellbeing: w,
            reward: reward(&outcome, w, self.profile, &self.norm),
            t_bar: (outcome.time_taken / self.norm.time).clamp(0.0, 1.0),
            c_bar: (outcome.cost / self.norm.cost).clamp(0.0, 1.0),
        }
    }

    fn mode(&self, mode: CollaborationMode) -> Result<Evaluated> {
        let alloc = instantiate_mode(mode, self.subtask, self.state.fatigue, self.bounds)?;
        let (outcome, next) = execute_with_state(self.subtask, &alloc, self.state, &self.ctx, self.draws);
        Ok(self.finish(alloc, outcome, next))
    }

    fn pure(&self, agent: AgentKind) -> Evaluated {
        let (outcome, next) = counterfactual_pure(self.subtask, agent, self.state, &self.ctx, self.draws);
        let alloc = match agent {
            AgentKind::Human => AllocationSpec {
                mode: CollaborationMode::HumanOnly,
                sigma_h: 1.0,
                sigma_ai: 0.0,
                lead: crate::modes::Lead::Human,
            },
            AgentKind::Ai => AllocationSpec {
                mode: CollaborationMode::Autonomous,
                sigma_h: 0.0,
                sigma_ai: 1.0,
                lead: crate::modes::Lead::Ai,
            },
        };
        self.finish(alloc, outcome, next)
    }
}

fn exec_context<'a>(scenario: &'a ScenarioSpec, params: &'a ModelParams, fatigue_dynamics: bool) -> ExecContext<'a> {
    ExecContext {
        weights: &params.affinity,
        costs: &scenario.cost_profile,
        outcome: &params.outcome_model,
        human: &params.human,
        fatigue_resistance: scenario.human_profile.fatigue_resistance,
        fatigue_rate: scenario.pressure.fatigue_rate,
        fatigue_dynamics,
    }
}

fn normalisers(subtask: &Subtask, scenario: &ScenarioSpec, ctx: &ExecContext<'_>) -> Normalisers {
    let mut n = Normalisers::for_subtask(subtask, ctx);
    if let Some(o) = scenario.normalisers {
        n.time = o.time_factor * subtask.baseline_duration;
        n.cost = o.cost_factor * subtask.baseline_duration * ctx.costs.human.hourly_rate;
    }
    n
}

/// Runs one seeded simulation.
pub fn run(config: &RunConfig, lib: &Library) -> Result<RunResult> {
    config.validate(lib)?;
    let scenario = lib.scenario(&config.scenario)?.clone();
    let params = &config.params;
    let profile = config.reward_weights()?;
    let level = config.effective_level();
    let gov = GovernanceLevel::assemble(level, &lib.rules);
    let audit = config
        .audit_level
        .filter(|l| *l != level)
        .map(|l| GovernanceLevel::assemble(l, &lib.rules));
    let bounds = scenario.share_bounds(&params.shares);
    let cycles = config.cycles.unwrap_or(scenario.cycles);
    let hp = scenario.human_profile;
    let ab = config.ablation;
    let ctx = exec_context(&scenario, params, !ab.no_fatigue);

    let mut streams = StreamPlan::new(config.seed);
    let mut allocator = Allocator::new(config.strategy.algorithm, params.bandit);
    let mut state = HumanState::from_profile(&hp);
    let mut records: Vec<AllocationRecord> = Vec::new();
    let mut history: Vec<Trace> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut cum_regret = 0.0;

    for sprint in 0..cycles {
        state.start_cycle();
        let tasks = sample_sprint(&lib.subtasks, &scenario, &mut streams.task_sampling)?;
        let mut sprint_traces: Vec<Trace> = Vec::new();
        let mut sprint_time = 0.0;
        let mut sprint_ai_share = 0.0;
        for subtask in &tasks {
            let draws = NoiseDraws {
                human: StandardNormal.sample(&mut streams.human_noise),
                ai: StandardNormal.sample(&mut streams.ai_noise),
            };
            let eval_ctx = EvalContext::new(subtask, state.fatigue, &hp, &params.risk);
            let directive = evaluate(&gov, &eval_ctx);
            for w in &directive.warnings {
                warnings.push(format!("sprint {sprint}: {w}"));
            }
            let feasible = directive.feasible_modes();
            let violation = audit.as_ref().map(|a| evaluate(a, &eval_ctx).feasible_modes());
            let alpha_ai = affinity_unchecked(&subtask.profile, &params.affinity);
            let high_value = is_high_value(subtask, &params.wellbeing);
            let step = Step {
                subtask,
                state: &state,
                ctx,
                bounds: &bounds,
                params,
                profile: &profile,
                norm: normalisers(subtask, &scenario, &ctx),
                draws,
                history: &history,
                sprint: &sprint_traces,
                high_value,
            };
            let decision = Decision {
                task_type: &subtask.task_type,
                profile: &subtask.profile,
                alpha_ai,
                fatigue: state.fatigue,
                tutor: state.tutor_mode_active,
                sprint,
                feasible,
            };
            let selection: Selection = if config.strategy.algorithm == Algorithm::Oracle {
                let mut score = |m: CollaborationMode| step.mode(m).map(|e| e.reward).unwrap_or(f64::NEG_INFINITY);
                allocator.select(&decision, &mut streams.bandit_sampling, Some(&mut score))
            } else {
                allocator.select(&decision, &mut streams.bandit_sampling, None)
            };
            let realised = step.mode(selection.mode)?;
            let cf_h = step.pure(AgentKind::Human);
            let cf_ai = step.pure(AgentKind::Ai);
            let regret = (cf_h.reward.max(cf_ai.reward) - realised.reward).max(0.0);
            cum_regret += regret;
            allocator.update(&decision, &selection, realised.reward);

            let mut next = realised.next;
            if !ab.no_trust && realised.alloc.sigma_ai > 0.0 {
                next.update_trust(&params.human, realised.outcome.success);
            }
            let trace = Trace {
                mode: selection.mode,
                high_value,
                relief: realised.outcome.relief,
            };
            sprint_time += realised.outcome.time_taken;
            sprint_ai_share += realised.alloc.sigma_ai;
            records.push(AllocationRecord {
                index: records.len() as u32,
                sprint,
                subtask_id: subtask.id.clone(),
                subtask_name: subtask.name.clone(),
                task_type: subtask.task_type.clone(),
                alpha_ai,
                risk: eval_ctx.risk,
                budget: eval_ctx.budget,
                high_value,
                directive,
                feasible,
                warm_start: selection.warm_start,
                overridden: selection.overridden(),
                violation: violation.is_some_and(|f| !f.contains(selection.mode)),
                allocation: realised.alloc,
                draws,
                outcome: realised.outcome,
                t_bar: realised.t_bar,
                c_bar: realised.c_bar,
                signals: realised.signals,
                wellbeing: realised.wellbeing,
                reward: realised.reward,
                cf_human_reward: cf_h.reward,
                cf_ai_reward: cf_ai.reward,
                regret,
                cum_regret,
                state: next,
            });
            state = next;
            sprint_traces.push(trace);
            history.push(trace);
        }
        if !ab.no_fatigue {
            let slack = (scenario.sprint_time_budget() - sprint_time).max(0.0);
            state.recover(&params.human, params.human.rest_hours_per_cycle + slack);
        }
        if !ab.no_deskilling {
            let n = tasks.len() as u32;
            state.update_deskilling(&params.human, sprint_ai_share / n as f64, n);
        }
        // The sprint's last record carries the post-recovery state.
        if let Some(last) = records.last_mut() {
            last.state = state;
        }
    }

    let (sprints, aggregate) = compute_kpis(&records, &scenario, params);
    let flags = screens(&aggregate, &params.screens);
    Ok(RunResult {
        config: config.clone(),
        domain: scenario.domain,
        level,
        records,
        sprints,
        aggregate,
        screens: flags,
        warnings,
    })
}

/// Rewards of all five modes for every record of a finished run, evaluated
/// from the event log under the record's own draws and pre-decision state.
/// Modes that cannot be instantiated on a subtask score `-inf`.
pub fn replay_mode_rewards(result: &RunResult, lib: &Library) -> Result<Vec<[f64; 5]>> {
    let config = &result.config;
    let scenario = lib.scenario(&config.scenario)?;
    let params = &config.params;
    let profile = config.reward_weights()?;
    let bounds = scenario.share_bounds(&params.shares);
    let ctx = exec_context(scenario, params, !config.ablation.no_fatigue);
    let mut state = HumanState::from_profile(&scenario.human_profile);
    let traces: Vec<Trace> = result
        .records
        .iter()
        .map(|r| Trace {
            mode: r.mode(),
            high_value: r.high_value,
            relief: r.outcome.relief,
        })
        .collect();
    let mut out = Vec::with_capacity(result.records.len());
    for (i, rec) in result.records.iter().enumerate() {
        if i == 0 || result.records[i - 1].sprint != rec.sprint {
            state.start_cycle();
        }
        let subtask = lib.subtask(&rec.subtask_id)?;
        let sprint_start = result.records[..i].iter().rposition(|r| r.sprint != rec.sprint).map_or(0, |p| p + 1);
        let step = Step {
            subtask,
            state: &state,
            ctx,
            bounds: &bounds,
            params,
            profile: &profile,
            norm: normalisers(subtask, scenario, &ctx),
            draws: rec.draws,
            history: &traces[..i],
            sprint: &traces[sprint_start..i],
            high_value: rec.high_value,
        };
        let mut row = [f64::NEG_INFINITY; 5];
        for m in CollaborationMode::ALL {
            if let Ok(e) = step.mode(m) {
                row[m.index()] = e.reward;
            }
        }
        out.push(row);
        state = rec.state;
    }
    Ok(out)
}

/// One mode of a what-if preview.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModePreview {
    pub mode: CollaborationMode,
    pub allocation: AllocationSpec,
    pub expected_quality: f64,
    pub expected_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub subtask_id: String,
    pub level: Level,
    pub alpha_ai: f64,
    pub risk: f64,
    pub budget: f64,
    pub directive: GovernanceDirective,
    pub feasible: ModeSet,
    pub warm_start_mode: CollaborationMode,
    pub modes: Vec<ModePreview>,
    /// Feasible mode with the highest expected reward.
    pub best_mode: CollaborationMode,
}

/// Read-only preview of the governance directive and per-mode shares and
/// expected rewards, using noise-free outcome means.
pub fn whatif_preview(
    subtask: &Subtask,
    state: &HumanState,
    level: Level,
    scenario: &ScenarioSpec,
    rules: &[crate::policy::PolicyRule],
    params: &ModelParams,
    reward_profile: &RewardProfile,
) -> Result<Preview> {
    let gov = GovernanceLevel::assemble(level, rules);
    let hp = scenario.human_profile;
    let eval_ctx = EvalContext::new(subtask, state.fatigue, &hp, &params.risk);
    let directive = evaluate(&gov, &eval_ctx);
    let feasible = directive.feasible_modes();
    let bounds = scenario.share_bounds(&params.shares);
    let ctx = exec_context(scenario, params, true);
    let alpha_ai = affinity_unchecked(&subtask.profile, &params.affinity);
    let step = Step {
        subtask,
        state,
        ctx,
        bounds: &bounds,
        params,
        profile: reward_profile,
        norm: normalisers(subtask, scenario, &ctx),
        draws: NoiseDraws::ZERO,
        history: &[],
        sprint: &[],
        high_value: is_high_value(subtask, &params.wellbeing),
    };
    let mut modes = Vec::new();
    for m in feasible.iter() {
        let e = step.mode(m)?;
        modes.push(ModePreview {
            mode: m,
            allocation: e.alloc,
            expected_quality: e.outcome.quality,
            expected_reward: e.reward,
        });
    }
    let best_mode = crate::learners::oracle_select(feasible, |m| {
        modes.iter().find(|p| p.mode == m).map(|p| p.expected_reward).unwrap_or(f64::NEG_INFINITY)
    });
    Ok(Preview {
        subtask_id: subtask.id.clone(),
        level,
        alpha_ai,
        risk: eval_ctx.risk,
        budget: eval_ctx.budget,
        warm_start_mode: crate::learners::warm_start_select(alpha_ai, state.tutor_mode_active, feasible),
        directive,
        feasible,
        modes,
        best_mode,
    })
}

impl DirectiveKind {
    pub fn label(&self) -> &'static str {
        match self {
            DirectiveKind::None => "none",
            DirectiveKind::ForcedAssignment(_) => "forced_assignment",
            DirectiveKind::ForcedMode(_) => "forced_mode",
            DirectiveKind::Cap(_) => "cap",
        }
    }
}
