//! Stochastic execution model, well-being composite and the four-outcome
//! reward, with counterfactual evaluation under common random numbers.

use serde::{Deserialize, Serialize};

use crate::catalog::{affinity_unchecked, AffinityWeights, AgentKind, CostProfile, Subtask};
use crate::error::{HaasError, Result};
use crate::humanstate::{ExecAgent, HumanParams, HumanState};
use crate::modes::{AllocationSpec, CollaborationMode, Lead};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutcomeParams {
    pub ai_speed: f64,
    pub human_speed: f64,
    pub overlap: f64,
    pub synergy: f64,
    pub success_threshold: f64,
    pub skill_base: f64,
    pub skill_gain: f64,
    pub fatigue_quality: f64,
    /// `time_norm = time_norm_factor · baseline_duration`.
    pub time_norm_factor: f64,
    /// `cost_norm = cost_norm_factor · baseline_duration · human_rate`.
    pub cost_norm_factor: f64,
}

impl Default for OutcomeParams {
    fn default() -> Self {
        OutcomeParams {
            ai_speed: 0.45,
            human_speed: 1.0,
            overlap: 0.75,
            synergy: 0.15,
            success_threshold: 0.40,
            skill_base: 0.6,
            skill_gain: 0.4,
            fatigue_quality: 0.3,
            time_norm_factor: 2.0,
            cost_norm_factor: 1.0,
        }
    }
}

impl OutcomeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("outcome_model.ai_speed", self.ai_speed),
            ("outcome_model.human_speed", self.human_speed),
            ("outcome_model.overlap", self.overlap),
            ("outcome_model.time_norm_factor", self.time_norm_factor),
            ("outcome_model.cost_norm_factor", self.cost_norm_factor),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HaasError::config(name, "must be > 0"));
            }
        }
        if self.overlap > 1.0 {
            return Err(HaasError::config("outcome_model.overlap", "must be <= 1"));
        }
        for (name, v) in [
            ("outcome_model.synergy", self.synergy),
            ("outcome_model.success_threshold", self.success_threshold),
            ("outcome_model.fatigue_quality", self.fatigue_quality),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(HaasError::config(name, "must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// The two standard-normal draws consumed per subtask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraws {
    pub human: f64,
    pub ai: f64,
}

impl NoiseDraws {
    pub const ZERO: NoiseDraws = NoiseDraws { human: 0.0, ai: 0.0 };
}

/// Fixed inputs of the execution model for one run.
#[derive(Debug, Clone, Copy)]
pub struct ExecContext<'a> {
    pub weights: &'a AffinityWeights,
    pub costs: &'a CostProfile,
    pub outcome: &'a OutcomeParams,
    pub human: &'a HumanParams,
    pub fatigue_resistance: f64,
    /// Scenario fatigue-rate multiplier.
    pub fatigue_rate: f64,
    /// When false, fatigue is frozen.
    pub fatigue_dynamics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub quality: f64,
    pub time_taken: f64,
    pub cost: f64,
    pub human_hours: f64,
    pub ai_hours: f64,
    pub success: bool,
    pub fatigue_increment: f64,
    /// Work fatigue a pure-human execution would have caused.
    pub pure_human_increment: f64,
    pub relief: bool,
}

pub fn exec_agent(alloc: &AllocationSpec) -> ExecAgent {
    match alloc.mode {
        CollaborationMode::HumanOnly => ExecAgent::Human,
        CollaborationMode::Autonomous => ExecAgent::Ai,
        _ => ExecAgent::Shared,
    }
}

pub fn mean_ai_quality(subtask: &Subtask, ctx: &ExecContext<'_>) -> f64 {
    affinity_unchecked(&subtask.profile, ctx.weights)
}

pub fn mean_human_quality(subtask: &Subtask, state: &HumanState, ctx: &ExecContext<'_>) -> f64 {
    let o = ctx.outcome;
    (1.0 - affinity_unchecked(&subtask.profile, ctx.weights))
        * (o.skill_base + o.skill_gain * state.skill)
        * (1.0 - o.fatigue_quality * state.fatigue)
}

fn pure_hours(subtask: &Subtask, o: &OutcomeParams) -> (f64, f64) {
    let base = subtask.baseline_duration * (0.5 + subtask.profile.complexity());
    (base * o.human_speed, base * o.ai_speed)
}

/// Executes `alloc` and returns the outcome together with the human state
/// after this subtask's fatigue accrual. `state` is not modified.
pub fn execute_with_state(
    subtask: &Subtask,
    alloc: &AllocationSpec,
    state: &HumanState,
    ctx: &ExecContext<'_>,
    draws: NoiseDraws,
) -> (ExecutionOutcome, HumanState) {
    let o = ctx.outcome;
    let q_h = (mean_human_quality(subtask, state, ctx) + ctx.costs.human.quality_noise * draws.human).clamp(0.0, 1.0);
    let q_ai = (mean_ai_quality(subtask, ctx) + ctx.costs.ai.quality_noise * draws.ai).clamp(0.0, 1.0);
    let (t_h, t_ai) = pure_hours(subtask, o);
    let (quality, human_hours, ai_hours, time_taken) = match alloc.mode {
        CollaborationMode::HumanOnly => (q_h, t_h, 0.0, t_h),
        CollaborationMode::Autonomous => (q_ai, 0.0, t_ai, t_ai),
        _ => {
            let (sh, sa) = (alloc.sigma_h, alloc.sigma_ai);
            let q = sh * q_h + sa * q_ai + o.synergy * sh * sa * subtask.profile.technical_depth;
            let hh = sh * t_h;
            let ha = sa * t_ai;
            (q.clamp(0.0, 1.0), hh, ha, o.overlap * (hh + ha))
        }
    };
    let cost = human_hours * ctx.costs.human.hourly_rate + ai_hours * ctx.costs.ai.hourly_rate;
    let kappa = subtask.profile.complexity();
    let pure_human_increment =
        HumanState::work_increment(ctx.human, t_h, kappa, ctx.fatigue_resistance, ctx.fatigue_rate);
    let agent = exec_agent(alloc);
    let mut next = *state;
    let fatigue_increment = if ctx.fatigue_dynamics {
        let switched = state.last_executing_agent != ExecAgent::None && state.last_executing_agent != agent;
        next.accrue_fatigue(ctx.human, human_hours, kappa, switched, ctx.fatigue_resistance, ctx.fatigue_rate)
    } else {
        0.0
    };
    next.last_executing_agent = agent;
    let relief = alloc.mode.is_shared() && fatigue_increment < pure_human_increment;
    (
        ExecutionOutcome {
            quality,
            time_taken,
            cost,
            human_hours,
            ai_hours,
            success: quality >= o.success_threshold,
            fatigue_increment,
            pure_human_increment,
            relief,
        },
        next,
    )
}

pub fn execute(
    subtask: &Subtask,
    alloc: &AllocationSpec,
    state: &HumanState,
    ctx: &ExecContext<'_>,
    draws: NoiseDraws,
) -> ExecutionOutcome {
    execute_with_state(subtask, alloc, state, ctx, draws).0
}

/// Pure human or pure AI execution under the same draws and state.
pub fn counterfactual_pure(
    subtask: &Subtask,
    agent: AgentKind,
    state: &HumanState,
    ctx: &ExecContext<'_>,
    draws: NoiseDraws,
) -> (ExecutionOutcome, HumanState) {
    let alloc = match agent {
        AgentKind::Human => AllocationSpec {
            mode: CollaborationMode::HumanOnly,
            sigma_h: 1.0,
            sigma_ai: 0.0,
            lead: Lead::Human,
        },
        AgentKind::Ai => AllocationSpec {
            mode: CollaborationMode::Autonomous,
            sigma_h: 0.0,
            sigma_ai: 1.0,
            lead: Lead::Ai,
        },
    };
    execute_with_state(subtask, &alloc, state, ctx, draws)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WellbeingWeights {
    pub fatigue: f64,
    pub monotony: f64,
    pub deskilling: f64,
    pub exclusion: f64,
    pub relief: f64,
    /// Number of preceding subtasks the monotony signal looks back over.
    pub monotony_window: usize,
    /// τ or c at or above this marks a high-value subtask.
    pub high_value_threshold: f64,
}

impl Default for WellbeingWeights {
    fn default() -> Self {
        WellbeingWeights {
            fatigue: 0.35,
            monotony: 0.20,
            deskilling: 0.25,
            exclusion: 0.10,
            relief: 0.10,
            monotony_window: 5,
            high_value_threshold: 0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellbeingSignals {
    pub fatigue: f64,
    pub monotony: f64,
    pub deskilling: f64,
    pub exclusion: f64,
    pub relief: f64,
}

pub fn wellbeing(s: &WellbeingSignals, w: &WellbeingWeights) -> f64 {
    (1.0 - w.fatigue * s.fatigue - w.monotony * s.monotony - w.deskilling * s.deskilling
        - w.exclusion * s.exclusion
        + w.relief * s.relief)
        .clamp(0.0, 1.0)
}

pub fn is_high_value(subtask: &Subtask, w: &WellbeingWeights) -> bool {
    subtask.profile.technical_depth >= w.high_value_threshold || subtask.profile.creativity >= w.high_value_threshold
}

/// Minimal per-subtask facts the well-being signals are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trace {
    pub mode: CollaborationMode,
    pub high_value: bool,
    pub relief: bool,
}

/// Builds the five signals for `current`.
///
/// `history` holds the run's earlier subtasks in order; `sprint` holds this
/// sprint's earlier subtasks. Monotony compares `current` with up to
/// `monotony_window` preceding subtasks and is 0 with no history. Exclusion
/// and relief are fractions over the sprint so far including `current`.
pub fn wellbeing_signals(
    fatigue: f64,
    cumulative_deskilling: f64,
    history: &[Trace],
    sprint: &[Trace],
    current: &Trace,
    w: &WellbeingWeights,
) -> WellbeingSignals {
    let window = &history[history.len().saturating_sub(w.monotony_window)..];
    let monotony = if window.is_empty() {
        0.0
    } else {
        window.iter().filter(|t| t.mode == current.mode).count() as f64 / window.len() as f64
    };
    let n = (sprint.len() + 1) as f64;
    let all = sprint.iter().chain(std::iter::once(current));
    let mut excluded = 0usize;
    let mut relieved = 0usize;
    for t in all {
        if t.high_value && t.mode == CollaborationMode::Autonomous {
            excluded += 1;
        }
        if t.mode.is_shared() && t.relief {
            relieved += 1;
        }
    }
    WellbeingSignals {
        fatigue: fatigue.clamp(0.0, 1.0),
        monotony,
        deskilling: cumulative_deskilling.clamp(0.0, 1.0),
        exclusion: excluded as f64 / n,
        relief: relieved as f64 / n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardProfile {
    pub w_q: f64,
    pub w_t: f64,
    pub w_co: f64,
    pub w_w: f64,
}

impl Default for RewardProfile {
    fn default() -> Self {
        RewardProfile::FOUR_OUTCOME
    }
}

impl RewardProfile {
    pub const FOUR_OUTCOME: RewardProfile = RewardProfile { w_q: 0.30, w_t: 0.20, w_co: 0.10, w_w: 0.40 };
    pub const COST_TIME: RewardProfile = RewardProfile { w_q: 0.0, w_t: 0.55, w_co: 0.45, w_w: 0.0 };
    pub const QUALITY_COST_TIME: RewardProfile = RewardProfile { w_q: 0.40, w_t: 0.30, w_co: 0.30, w_w: 0.0 };

    pub const PRESETS: [&'static str; 3] = ["four_outcome", "cost_time", "quality_cost_time"];

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "four_outcome" => Ok(Self::FOUR_OUTCOME),
            "cost_time" => Ok(Self::COST_TIME),
            "quality_cost_time" => Ok(Self::QUALITY_COST_TIME),
            _ => Err(HaasError::config("reward_profile", format!("unknown profile `{name}`"))),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w_q, self.w_t, self.w_co, self.w_w]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        RewardProfile { w_q: a[0], w_t: a[1], w_co: a[2], w_w: a[3] }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.as_array();
        if a.iter().any(|w| !(*w >= 0.0)) {
            return Err(HaasError::config("reward_profile", "weights must be >= 0"));
        }
        if (a.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(HaasError::config("reward_profile", "weights must sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalisers {
    pub time: f64,
    pub cost: f64,
}

impl Normalisers {
    pub fn for_subtask(subtask: &Subtask, ctx: &ExecContext<'_>) -> Self {
        Normalisers {
            time: ctx.outcome.time_norm_factor * subtask.baseline_duration,
            cost: ctx.outcome.cost_norm_factor * subtask.baseline_duration * ctx.costs.human.hourly_rate,
        }
    }
}

pub fn reward_from_parts(q: f64, t_bar: f64, c_bar: f64, w: f64, p: &RewardProfile) -> f64 {
    (p.w_q * q + p.w_t * (1.0 - t_bar) + p.w_co * (1.0 - c_bar) + p.w_w * w).clamp(0.0, 1.0)
}

pub fn reward(outcome: &ExecutionOutcome, w: f64, profile: &RewardProfile, norm: &Normalisers) -> f64 {
    let t_bar = (outcome.time_taken / norm.time).clamp(0.0, 1.0);
    let c_bar = (outcome.cost / norm.cost).clamp(0.0, 1.0);
    reward_from_parts(outcome.quality, t_bar, c_bar, w, profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CognitiveProfile, Domain, HumanProfile};
    use crate::modes::{instantiate_mode, ShareBounds};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    struct Fixture {
        weights: AffinityWeights,
        costs: CostProfile,
        outcome: OutcomeParams,
        human: HumanParams,
    }

    impl Fixture {
        fn new() -> Self {
            Fixture {
                weights: AffinityWeights::default(),
                costs: CostProfile::for_domain(Domain::Software),
                outcome: OutcomeParams::default(),
                human: HumanParams::default(),
            }
        }

        fn ctx(&self) -> ExecContext<'_> {
            ExecContext {
                weights: &self.weights,
                costs: &self.costs,
                outcome: &self.outcome,
                human: &self.human,
                fatigue_resistance: 1.0,
                fatigue_rate: 1.0,
                fatigue_dynamics: true,
            }
        }
    }

    fn subtask(tau: f64, a: f64, baseline: f64) -> Subtask {
        Subtask {
            id: "s".into(),
            name: "s".into(),
            task_type: "Testing".into(),
            domain: Domain::Software,
            profile: CognitiveProfile::new(0.5, tau, 0.3, a, 0.3),
            baseline_duration: baseline,
            criticality: 0.3,
            constraint: crate::catalog::Constraint::None,
        }
    }

    fn alloc(mode: CollaborationMode, s: &Subtask, f: f64) -> AllocationSpec {
        instantiate_mode(mode, s, f, &ShareBounds::default()).unwrap()
    }

    #[test]
    fn autonomous_cost_from_ai_hours() {
        let fx = Fixture::new();
        // (0.5 + κ)·0.45·baseline = 2 h with κ = 0.5.
        let s = subtask(0.5, 0.5, 2.0 / 0.45);
        let st = HumanState::from_profile(&HumanProfile::default());
        let out = execute(&s, &alloc(CollaborationMode::Autonomous, &s, 0.1), &st, &fx.ctx(), NoiseDraws::ZERO);
        assert_abs_diff_eq!(out.ai_hours, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.cost, 4.0, epsilon = 1e-9);
        assert_eq!(out.human_hours, 0.0);
        assert_eq!(out.fatigue_increment, 0.0);
    }

    #[test]
    fn replay_is_identical() {
        let fx = Fixture::new();
        let s = subtask(0.4, 0.2, 2.0);
        let st = HumanState::from_profile(&HumanProfile::default());
        let d = NoiseDraws { human: 0.3, ai: -1.2 };
        let a = alloc(CollaborationMode::Autonomous, &s, 0.1);
        assert_eq!(execute(&s, &a, &st, &fx.ctx(), d), execute(&s, &a, &st, &fx.ctx(), d));
    }

    #[test]
    fn peer_synergy_is_exact() {
        let fx = Fixture::new();
        let s = subtask(0.8, 0.2, 2.0);
        let st = HumanState::from_profile(&HumanProfile::default());
        let ctx = fx.ctx();
        let q_h = mean_human_quality(&s, &st, &ctx);
        let q_ai = mean_ai_quality(&s, &ctx);
        let out = execute(&s, &alloc(CollaborationMode::Peer, &s, 0.1), &st, &ctx, NoiseDraws::ZERO);
        assert_abs_diff_eq!(out.quality - (0.5 * q_h + 0.5 * q_ai), 0.03, epsilon = 1e-12);
        assert!(out.relief);
    }

    #[test]
    fn self_counterfactual() {
        let fx = Fixture::new();
        let s = subtask(0.6, 0.4, 3.0);
        let st = HumanState::from_profile(&HumanProfile::default());
        let d = NoiseDraws { human: -0.7, ai: 0.9 };
        let realised = execute(&s, &alloc(CollaborationMode::Autonomous, &s, 0.1), &st, &fx.ctx(), d);
        assert_eq!(counterfactual_pure(&s, AgentKind::Ai, &st, &fx.ctx(), d).0, realised);
        let realised = execute(&s, &alloc(CollaborationMode::HumanOnly, &s, 0.1), &st, &fx.ctx(), d);
        assert_eq!(counterfactual_pure(&s, AgentKind::Human, &st, &fx.ctx(), d).0, realised);
    }

    #[test]
    fn fatigue_lowers_human_mean() {
        let fx = Fixture::new();
        let ctx = fx.ctx();
        let s = subtask(0.3, 0.8, 2.0);
        let mut rested = HumanState::from_profile(&HumanProfile::default());
        rested.fatigue = 0.0;
        let mut tired = rested;
        tired.fatigue = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let (mut sum0, mut sum1) = (0.0, 0.0);
        for _ in 0..n {
            let d = NoiseDraws { human: StandardNormal.sample(&mut rng), ai: 0.0 };
            sum0 += counterfactual_pure(&s, AgentKind::Human, &rested, &ctx, d).0.quality;
            sum1 += counterfactual_pure(&s, AgentKind::Human, &tired, &ctx, d).0.quality;
        }
        let m0 = mean_human_quality(&s, &rested, &ctx);
        assert_abs_diff_eq!(sum1 / sum0, 0.7, epsilon = 0.01);
        assert_abs_diff_eq!(sum0 / n as f64, m0, epsilon = 0.005);
    }

    #[test]
    fn ai_quality_distribution() {
        let fx = Fixture::new();
        let ctx = fx.ctx();
        let s = subtask(0.5, 0.3, 2.0);
        let st = HumanState::from_profile(&HumanProfile::default());
        let a = alloc(CollaborationMode::Autonomous, &s, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let qs: Vec<f64> = (0..10_000)
            .map(|_| {
                let d = NoiseDraws { human: 0.0, ai: StandardNormal.sample(&mut rng) };
                execute(&s, &a, &st, &ctx, d).quality
            })
            .collect();
        let mean = qs.iter().sum::<f64>() / qs.len() as f64;
        let sd = (qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (qs.len() - 1) as f64).sqrt();
        assert!((mean - mean_ai_quality(&s, &ctx)).abs() <= 3.0 * 0.04 / 100.0);
        assert!((sd - 0.04).abs() <= 0.004);
    }

    #[test]
    fn wellbeing_examples() {
        let w = WellbeingWeights::default();
        let sig = |f, m, d, e, r| WellbeingSignals { fatigue: f, monotony: m, deskilling: d, exclusion: e, relief: r };
        assert_abs_diff_eq!(wellbeing(&sig(0.0, 0.0, 0.0, 0.0, 0.0), &w), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(wellbeing(&sig(1.0, 1.0, 1.0, 1.0, 0.0), &w), 0.10, epsilon = 1e-12);
        assert_abs_diff_eq!(wellbeing(&sig(0.5, 0.0, 0.0, 0.0, 1.0), &w), 0.925, epsilon = 1e-12);
    }

    #[test]
    fn reward_examples() {
        let p = RewardProfile::FOUR_OUTCOME;
        assert_abs_diff_eq!(reward_from_parts(1.0, 0.0, 0.0, 1.0, &p), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(reward_from_parts(0.5, 0.5, 0.5, 0.5, &p), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(reward_from_parts(0.0, 1.0, 1.0, 0.0, &p), 0.0, epsilon = 1e-12);
        for name in RewardProfile::PRESETS {
            RewardProfile::preset(name).unwrap().validate().unwrap();
        }
    }

    #[test]
    fn signal_examples() {
        let w = WellbeingWeights::default();
        let t = |mode, hv, relief| Trace { mode, high_value: hv, relief };
        let cur = t(CollaborationMode::Peer, false, true);
        let first = wellbeing_signals(0.2, 0.0, &[], &[], &cur, &w);
        assert_eq!(first.monotony, 0.0);
        let sprint = [
            t(CollaborationMode::Copilot, false, true),
            t(CollaborationMode::Autonomous, false, false),
            t(CollaborationMode::HumanOnly, false, false),
        ];
        let s = wellbeing_signals(0.2, 0.0, &sprint, &sprint, &cur, &w);
        assert_eq!(s.exclusion, 0.0);
        assert_abs_diff_eq!(s.relief, 0.5, epsilon = 1e-12);
        let same = [cur; 7];
        assert_eq!(wellbeing_signals(0.2, 0.0, &same, &[], &cur, &w).monotony, 1.0);
    }

    proptest! {
        #[test]
        fn reward_monotone(q in 0.0f64..=1.0, t in 0.0f64..=1.0, c in 0.0f64..=1.0, w in 0.0f64..=1.0, d in 0.0f64..=0.2) {
            let p = RewardProfile::FOUR_OUTCOME;
            let r = reward_from_parts(q, t, c, w, &p);
            prop_assert!(reward_from_parts((q + d).min(1.0), t, c, w, &p) >= r);
            prop_assert!(reward_from_parts(q, t, c, (w + d).min(1.0), &p) >= r);
            prop_assert!(reward_from_parts(q, (t - d).max(0.0), c, w, &p) >= r);
            prop_assert!(reward_from_parts(q, t, (c - d).max(0.0), w, &p) >= r);
        }

        #[test]
        fn wellbeing_bounded(f in 0.0f64..=1.0, m in 0.0f64..=1.0, de in 0.0f64..=1.0, e in 0.0f64..=1.0, r in 0.0f64..=1.0) {
            let v = wellbeing(&WellbeingSignals { fatigue: f, monotony: m, deskilling: de, exclusion: e, relief: r }, &WellbeingWeights::default());
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn cost_identity_and_overlap(
            mi in 0usize..5, tau in 0.0f64..=1.0, a in 0.0f64..=1.0, f in 0.0f64..=1.0,
            zh in -3.0f64..3.0, za in -3.0f64..3.0, base in 0.5f64..5.0,
        ) {
            let fx = Fixture::new();
            let s = subtask(tau, a, base);
            let mut st = HumanState::from_profile(&HumanProfile::default());
            st.fatigue = f;
            let mode = CollaborationMode::ALL[mi];
            let out = execute(&s, &alloc(mode, &s, f), &st, &fx.ctx(), NoiseDraws { human: zh, ai: za });
            let expect = out.human_hours * 50.0 + out.ai_hours * 2.0;
            prop_assert!((out.cost - expect).abs() <= 1e-6);
            prop_assert!(out.time_taken <= out.human_hours + out.ai_hours + 1e-12);
            prop_assert!((0.0..=1.0).contains(&out.quality));
        }
    }
}
