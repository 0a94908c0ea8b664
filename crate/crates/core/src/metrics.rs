//! Sprint and run KPIs, regret accounting and governance screens.

use serde::{Deserialize, Serialize};

use crate::catalog::ScenarioSpec;
use crate::engine::AllocationRecord;
use crate::error::{HaasError, Result};
use crate::modes::CollaborationMode;
use crate::params::ModelParams;
use crate::policy::DirectiveKind;

pub use crate::stats::{wilcoxon_signed_rank, WilcoxonResult};

pub fn subtask_regret(realised: f64, cf_human: f64, cf_ai: f64) -> f64 {
    (cf_human.max(cf_ai) - realised).max(0.0)
}

/// Per-subtask regret entries and their running total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretLedger {
    pub entries: Vec<f64>,
    pub total: f64,
}

impl RegretLedger {
    pub fn push(&mut self, realised: f64, cf_human: f64, cf_ai: f64) -> f64 {
        let r = subtask_regret(realised, cf_human, cf_ai);
        self.entries.push(r);
        self.total += r;
        r
    }

    pub fn cumulative(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(0.0, |acc, r| {
                *acc += r;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KpiParams {
    pub defect_q: f64,
    pub rework_upper: f64,
    pub scrap_q: f64,
    pub incident_q: f64,
    /// Risk at or above this marks a risky subtask for the screens.
    pub risky_risk: f64,
}

impl Default for KpiParams {
    fn default() -> Self {
        KpiParams {
            defect_q: 0.40,
            rework_upper: 0.55,
            scrap_q: 0.35,
            incident_q: 0.30,
            risky_risk: 0.55,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreenThresholds {
    pub q_min: f64,
    pub f_max: f64,
    pub desk_max: f64,
    pub participation_min: f64,
    pub monotony_max: f64,
    pub shared_min: f64,
    pub autonomous_highvalue_max: f64,
    pub highvalue_human_min: f64,
    pub risky_shared_min: f64,
}

impl Default for ScreenThresholds {
    fn default() -> Self {
        ScreenThresholds {
            q_min: 0.40,
            f_max: 0.95,
            desk_max: 0.05,
            participation_min: 0.10,
            monotony_max: 0.60,
            shared_min: 0.25,
            autonomous_highvalue_max: 0.50,
            highvalue_human_min: 0.15,
            risky_shared_min: 0.25,
        }
    }
}

impl ScreenThresholds {
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.q_min,
            self.f_max,
            self.desk_max,
            self.participation_min,
            self.monotony_max,
            self.shared_min,
            self.autonomous_highvalue_max,
            self.highvalue_human_min,
            self.risky_shared_min,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        ScreenThresholds {
            q_min: a[0],
            f_max: a[1],
            desk_max: a[2],
            participation_min: a[3],
            monotony_max: a[4],
            shared_min: a[5],
            autonomous_highvalue_max: a[6],
            highvalue_human_min: a[7],
            risky_shared_min: a[8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.as_array().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(HaasError::config("screens", "thresholds must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// KPIs of one sprint. Percentages are in `[0, 100]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprintKpis {
    pub sprint: u32,
    pub lead_time: f64,
    pub quality: f64,
    pub cost: f64,
    /// Cost per feature (software) or per batch (manufacturing).
    pub objective: f64,
    pub defect_escape_pct: f64,
    pub rework_pct: f64,
    pub scrap_pct: f64,
    pub safety_incidents: u32,
    pub oee_proxy: f64,
    pub stockouts: u32,
    pub overload_hours: f64,
    pub hybrid_pct: f64,
    pub fatigue_avoided: f64,
    pub end_fatigue: f64,
    pub trust: f64,
    pub cum_deskilling: f64,
    pub human_participation_pct: f64,
    pub reward: f64,
    pub regret: f64,
    pub cum_regret: f64,
}

/// Run-level aggregate. Sprint quantities are means over sprints; counts and
/// totals are sums; `end_*` values are taken after the last sprint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub subtasks: u32,
    pub lead_time: f64,
    pub quality: f64,
    pub cost: f64,
    pub objective: f64,
    pub defect_escape_pct: f64,
    pub rework_pct: f64,
    pub scrap_pct: f64,
    pub safety_incidents: u32,
    pub oee_proxy: f64,
    pub stockouts: u32,
    pub overload_hours: f64,
    pub hybrid_pct: f64,
    pub fatigue_avoided: f64,
    pub fatigue: f64,
    pub end_fatigue: f64,
    pub peak_fatigue: f64,
    pub trust: f64,
    pub cum_deskilling: f64,
    pub human_participation_pct: f64,
    pub reward: f64,
    pub wellbeing: f64,
    pub cum_regret: f64,
    pub human_only_share: f64,
    pub copilot_share: f64,
    pub peer_share: f64,
    pub supervised_share: f64,
    pub autonomous_share: f64,
    pub forced_pct: f64,
    pub cap_pct: f64,
    pub override_pct: f64,
    pub monotony: f64,
    pub shared_fraction: f64,
    pub autonomous_highvalue_fraction: f64,
    pub highvalue_human_fraction: f64,
    pub risky_shared_fraction: f64,
    pub governance_violations: u32,
}

impl RunAggregate {
    /// Stable export column names, in order.
    pub const COLUMNS: [&'static str; 34] = [
        "lead_time",
        "quality",
        "cost",
        "objective",
        "defect_escape_pct",
        "rework_pct",
        "scrap_pct",
        "safety_incidents",
        "oee_proxy",
        "stockouts",
        "overload_hours",
        "hybrid_pct",
        "fatigue_avoided",
        "fatigue",
        "end_fatigue",
        "trust",
        "cum_deskilling",
        "human_participation_pct",
        "reward",
        "wellbeing",
        "cum_regret",
        "human_only_share",
        "copilot_share",
        "peer_share",
        "supervised_share",
        "autonomous_share",
        "forced_pct",
        "cap_pct",
        "override_pct",
        "monotony",
        "shared_fraction",
        "autonomous_highvalue_fraction",
        "highvalue_human_fraction",
        "risky_shared_fraction",
    ];

    pub fn column(&self, name: &str) -> Option<f64> {
        Some(match name {
            "subtasks" => self.subtasks as f64,
            "lead_time" => self.lead_time,
            "quality" => self.quality,
            "cost" => self.cost,
            "objective" => self.objective,
            "defect_escape_pct" => self.defect_escape_pct,
            "rework_pct" => self.rework_pct,
            "scrap_pct" => self.scrap_pct,
            "safety_incidents" => self.safety_incidents as f64,
            "oee_proxy" => self.oee_proxy,
            "stockouts" => self.stockouts as f64,
            "overload_hours" => self.overload_hours,
            "hybrid_pct" => self.hybrid_pct,
            "fatigue_avoided" => self.fatigue_avoided,
            "fatigue" => self.fatigue,
            "end_fatigue" => self.end_fatigue,
            "peak_fatigue" => self.peak_fatigue,
            "trust" => self.trust,
            "cum_deskilling" => self.cum_deskilling,
            "human_participation_pct" => self.human_participation_pct,
            "reward" => self.reward,
            "wellbeing" => self.wellbeing,
            "cum_regret" => self.cum_regret,
            "human_only_share" => self.human_only_share,
            "copilot_share" => self.copilot_share,
            "peer_share" => self.peer_share,
            "supervised_share" => self.supervised_share,
            "autonomous_share" => self.autonomous_share,
            "forced_pct" => self.forced_pct,
            "cap_pct" => self.cap_pct,
            "override_pct" => self.override_pct,
            "monotony" => self.monotony,
            "shared_fraction" => self.shared_fraction,
            "autonomous_highvalue_fraction" => self.autonomous_highvalue_fraction,
            "highvalue_human_fraction" => self.highvalue_human_fraction,
            "risky_shared_fraction" => self.risky_shared_fraction,
            "governance_violations" => self.governance_violations as f64,
            _ => return None,
        })
    }
}

/// Cost per feature or batch: mean sprint cost over subtasks per sprint.
pub fn objective(sprint_cost: f64, subtasks_per_cycle: u32) -> f64 {
    sprint_cost / subtasks_per_cycle as f64
}

fn pct(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * count as f64 / n as f64
    }
}

fn frac(count: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        count as f64 / n as f64
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

fn sprint_kpis(sprint: u32, recs: &[&AllocationRecord], scenario: &ScenarioSpec, p: &ModelParams) -> SprintKpis {
    let k = &p.kpi;
    let n = recs.len();
    let lead_time: f64 = recs.iter().map(|r| r.outcome.time_taken).sum();
    let cost: f64 = recs.iter().map(|r| r.outcome.cost).sum();
    let human: f64 = recs.iter().map(|r| r.outcome.human_hours).sum();
    let ai: f64 = recs.iter().map(|r| r.outcome.ai_hours).sum();
    let q = |r: &&AllocationRecord| r.outcome.quality;
    let last = recs.last().map(|r| r.state);
    SprintKpis {
        sprint,
        lead_time,
        quality: mean(recs.iter().map(q)),
        cost,
        objective: objective(cost, n.max(1) as u32),
        defect_escape_pct: pct(recs.iter().filter(|r| q(r) < k.defect_q).count(), n),
        rework_pct: pct(
            recs.iter().filter(|r| (k.defect_q..k.rework_upper).contains(&q(r))).count(),
            n,
        ),
        scrap_pct: pct(recs.iter().filter(|r| q(r) < k.scrap_q).count(), n),
        safety_incidents: recs
            .iter()
            .filter(|r| r.task_type == "Safety Supervision" && r.allocation.sigma_ai >= 1.0 && q(r) < k.incident_q)
            .count() as u32,
        oee_proxy: mean(recs.iter().map(q)) * mean(recs.iter().map(|r| 1.0 - r.t_bar)),
        stockouts: u32::from(lead_time > scenario.sprint_time_budget()),
        overload_hours: (ai - scenario.ai_capacity_hours).max(0.0),
        hybrid_pct: pct(recs.iter().filter(|r| r.mode().is_shared()).count(), n),
        fatigue_avoided: recs
            .iter()
            .filter(|r| r.mode().is_shared())
            .map(|r| r.outcome.pure_human_increment - r.outcome.fatigue_increment)
            .sum(),
        end_fatigue: last.map_or(0.0, |s| s.fatigue),
        trust: last.map_or(0.0, |s| s.trust),
        cum_deskilling: last.map_or(0.0, |s| s.cumulative_deskilling),
        human_participation_pct: if human + ai > 0.0 { 100.0 * human / (human + ai) } else { 0.0 },
        reward: mean(recs.iter().map(|r| r.reward)),
        regret: recs.iter().map(|r| r.regret).sum(),
        cum_regret: recs.last().map_or(0.0, |r| r.cum_regret),
    }
}

/// Per-sprint KPIs and the run aggregate of an event log.
pub fn compute_kpis(records: &[AllocationRecord], scenario: &ScenarioSpec, p: &ModelParams) -> (Vec<SprintKpis>, RunAggregate) {
    let n_sprints = records.iter().map(|r| r.sprint + 1).max().unwrap_or(0);
    let sprints: Vec<SprintKpis> = (0..n_sprints)
        .map(|s| {
            let recs: Vec<&AllocationRecord> = records.iter().filter(|r| r.sprint == s).collect();
            sprint_kpis(s, &recs, scenario, p)
        })
        .collect();
    let n = records.len();
    let sm = |f: fn(&SprintKpis) -> f64| mean(sprints.iter().map(f));
    let share = |m: CollaborationMode| pct(records.iter().filter(|r| r.mode() == m).count(), n);
    let human: f64 = records.iter().map(|r| r.outcome.human_hours).sum();
    let ai: f64 = records.iter().map(|r| r.outcome.ai_hours).sum();
    let high: Vec<&AllocationRecord> = records.iter().filter(|r| r.high_value).collect();
    let risky: Vec<&AllocationRecord> = records.iter().filter(|r| r.risk >= p.kpi.risky_risk).collect();
    let last = sprints.last();
    let agg = RunAggregate {
        subtasks: n as u32,
        lead_time: sm(|s| s.lead_time),
        quality: mean(records.iter().map(|r| r.outcome.quality)),
        cost: sm(|s| s.cost),
        objective: objective(sm(|s| s.cost), scenario.subtasks_per_cycle),
        defect_escape_pct: sm(|s| s.defect_escape_pct),
        rework_pct: sm(|s| s.rework_pct),
        scrap_pct: sm(|s| s.scrap_pct),
        safety_incidents: sprints.iter().map(|s| s.safety_incidents).sum(),
        oee_proxy: sm(|s| s.oee_proxy),
        stockouts: sprints.iter().map(|s| s.stockouts).sum(),
        overload_hours: sprints.iter().map(|s| s.overload_hours).sum(),
        hybrid_pct: pct(records.iter().filter(|r| r.mode().is_shared()).count(), n),
        fatigue_avoided: sprints.iter().map(|s| s.fatigue_avoided).sum(),
        fatigue: mean(records.iter().map(|r| r.state.fatigue)),
        end_fatigue: last.map_or(0.0, |s| s.end_fatigue),
        peak_fatigue: records.last().map_or(0.0, |r| r.state.peak_fatigue),
        trust: last.map_or(0.0, |s| s.trust),
        cum_deskilling: last.map_or(0.0, |s| s.cum_deskilling),
        human_participation_pct: if human + ai > 0.0 { 100.0 * human / (human + ai) } else { 0.0 },
        reward: mean(records.iter().map(|r| r.reward)),
        wellbeing: mean(records.iter().map(|r| r.wellbeing)),
        cum_regret: records.iter().map(|r| r.regret).sum(),
        human_only_share: share(CollaborationMode::HumanOnly),
        copilot_share: share(CollaborationMode::Copilot),
        peer_share: share(CollaborationMode::Peer),
        supervised_share: share(CollaborationMode::Supervised),
        autonomous_share: share(CollaborationMode::Autonomous),
        forced_pct: pct(
            records
                .iter()
                .filter(|r| matches!(r.directive.kind, DirectiveKind::ForcedAssignment(_) | DirectiveKind::ForcedMode(_)))
                .count(),
            n,
        ),
        cap_pct: pct(records.iter().filter(|r| matches!(r.directive.kind, DirectiveKind::Cap(_))).count(), n),
        override_pct: pct(records.iter().filter(|r| r.overridden).count(), n),
        monotony: mean(records.iter().map(|r| r.signals.monotony)),
        shared_fraction: frac(records.iter().filter(|r| r.mode().is_shared()).count(), n),
        autonomous_highvalue_fraction: frac(
            high.iter().filter(|r| r.mode() == CollaborationMode::Autonomous).count(),
            high.len(),
        ),
        highvalue_human_fraction: frac(high.iter().filter(|r| r.allocation.sigma_h > 0.0).count(), high.len()),
        risky_shared_fraction: frac(risky.iter().filter(|r| r.mode().is_shared()).count(), risky.len()),
        governance_violations: records.iter().filter(|r| r.violation).count() as u32,
    };
    (sprints, agg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScreenFlags {
    pub acceptable: bool,
    pub reasonable: bool,
    pub responsible: bool,
}

pub fn screens(a: &RunAggregate, t: &ScreenThresholds) -> ScreenFlags {
    let acceptable = a.quality >= t.q_min
        && a.end_fatigue <= t.f_max
        && a.cum_deskilling <= t.desk_max
        && a.human_participation_pct / 100.0 >= t.participation_min
        && a.governance_violations == 0;
    let reasonable = acceptable
        && a.monotony <= t.monotony_max
        && a.shared_fraction >= t.shared_min
        && a.autonomous_highvalue_fraction <= t.autonomous_highvalue_max;
    let responsible = reasonable
        && a.highvalue_human_fraction >= t.highvalue_human_min
        && a.risky_shared_fraction >= t.risky_shared_min;
    ScreenFlags {
        acceptable,
        reasonable,
        responsible,
    }
}

/// Names of the screen conditions `a` fails, in screen order.
pub fn screen_failures(a: &RunAggregate, t: &ScreenThresholds) -> Vec<&'static str> {
    let checks = [
        ("quality", a.quality >= t.q_min),
        ("end_fatigue", a.end_fatigue <= t.f_max),
        ("deskilling", a.cum_deskilling <= t.desk_max),
        ("participation", a.human_participation_pct / 100.0 >= t.participation_min),
        ("governance_violations", a.governance_violations == 0),
        ("monotony", a.monotony <= t.monotony_max),
        ("shared_fraction", a.shared_fraction >= t.shared_min),
        ("autonomous_highvalue", a.autonomous_highvalue_fraction <= t.autonomous_highvalue_max),
        ("highvalue_human", a.highvalue_human_fraction >= t.highvalue_human_min),
        ("risky_shared", a.risky_shared_fraction >= t.risky_shared_min),
    ];
    checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, RunConfig};
    use crate::library::Library;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn regret_examples() {
        assert_abs_diff_eq!(subtask_regret(0.5, 0.4, 0.7), 0.2, epsilon = 1e-12);
        assert_eq!(subtask_regret(0.8, 0.4, 0.7), 0.0);
        assert_eq!(subtask_regret(0.7, 0.4, 0.7), 0.0);
        let mut l = RegretLedger::default();
        for (r, h, a) in [(0.5, 0.4, 0.7), (0.9, 0.1, 0.2), (0.3, 0.6, 0.5)] {
            l.push(r, h, a);
        }
        assert_abs_diff_eq!(l.total, l.entries.iter().sum::<f64>(), epsilon = 1e-12);
        assert!(l.cumulative().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn objective_identity_against_published_costs() {
        assert_abs_diff_eq!(objective(645.91, 4), 161.48, epsilon = 0.005);
        assert_abs_diff_eq!(objective(588.54, 4), 147.13, epsilon = 0.005);
    }

    fn run_one(strategy: &str, scenario: &str) -> crate::engine::RunResult {
        run(&RunConfig::new(scenario, strategy.parse().unwrap(), 11), &Library::builtin()).unwrap()
    }

    #[test]
    fn all_human_kpis() {
        let r = run_one("fixed_human+off", "Standard Sprint");
        assert_eq!(r.aggregate.hybrid_pct, 0.0);
        assert_eq!(r.aggregate.human_participation_pct, 100.0);
        assert_eq!(r.aggregate.human_only_share, 100.0);
    }

    #[test]
    fn defect_escape_counts_below_threshold() {
        let mut r = run_one("fixed_human+off", "Standard Sprint");
        let lib = Library::builtin();
        let scen = lib.scenario("Standard Sprint").unwrap();
        r.records.truncate(4);
        for (rec, q) in r.records.iter_mut().zip([0.3, 0.5, 0.5, 0.5]) {
            rec.outcome.quality = q;
        }
        let (s, _) = compute_kpis(&r.records, scen, &ModelParams::default());
        assert_eq!(s[0].defect_escape_pct, 25.0);
    }

    #[test]
    fn objective_identity_holds_per_run() {
        for (strategy, scenario) in [("linucb+on", "Standard Sprint"), ("ai_only+off", "Standard Production")] {
            let r = run_one(strategy, scenario);
            let mean_cost = r.sprints.iter().map(|s| s.cost).sum::<f64>() / r.sprints.len() as f64;
            assert_abs_diff_eq!(r.aggregate.objective, mean_cost / 4.0, epsilon = 1e-9);
            for s in &r.sprints {
                assert_abs_diff_eq!(s.objective, s.cost / 4.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn violation_fails_acceptable() {
        let r = run_one("ai_only+off", "Standard Sprint");
        let vacuous = ScreenThresholds::from_array([0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!(screens(&r.aggregate, &vacuous).responsible);
        let mut a = r.aggregate.clone();
        a.governance_violations = 1;
        assert!(!screens(&a, &vacuous).acceptable);
    }

    #[test]
    fn audit_level_counts_violations() {
        let lib = Library::builtin();
        let mut c = RunConfig::new("Standard Production", "ai_only+off".parse().unwrap(), 11);
        c.audit_level = Some(crate::policy::Level::L3);
        let r = run(&c, &lib).unwrap();
        assert!(r.aggregate.governance_violations > 0);
        assert!(!r.screens.acceptable);
    }

    fn aggregate() -> impl Strategy<Value = RunAggregate> {
        (
            prop::array::uniform9(0.0f64..=1.0),
            0u32..3,
            0.0f64..=100.0,
        )
            .prop_map(|(v, viol, part)| RunAggregate {
                quality: v[0],
                end_fatigue: v[1],
                cum_deskilling: v[2] * 0.1,
                human_participation_pct: part,
                monotony: v[3],
                shared_fraction: v[4],
                autonomous_highvalue_fraction: v[5],
                highvalue_human_fraction: v[6],
                risky_shared_fraction: v[7],
                governance_violations: viol,
                ..RunAggregate::default()
            })
    }

    proptest! {
        #[test]
        fn screens_nest(a in aggregate(), t in prop::array::uniform9(0.0f64..=1.0)) {
            let f = screens(&a, &ScreenThresholds::from_array(t));
            prop_assert!(!f.responsible || f.reasonable);
            prop_assert!(!f.reasonable || f.acceptable);
        }

        #[test]
        fn failures_empty_iff_responsible(a in aggregate(), t in prop::array::uniform9(0.0f64..=1.0)) {
            let t = ScreenThresholds::from_array(t);
            prop_assert_eq!(screen_failures(&a, &t).is_empty(), screens(&a, &t).responsible);
        }

        #[test]
        fn vacuous_screen_accepts(a in aggregate()) {
            let mut a = a;
            a.governance_violations = 0;
            let t = ScreenThresholds::from_array([0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
            prop_assert!(screens(&a, &t).acceptable);
        }
    }
}
