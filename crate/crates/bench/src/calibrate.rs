//! Random-search calibration over jittered parameter candidates, ranked
//! feasible-first.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use haas_core::catalog::perturb_weights;
use haas_core::engine::StreamPlan;
use haas_core::metrics::{screen_failures, ScreenThresholds};
use haas_core::outcomes::RewardProfile;
use haas_core::{HaasError, Level, Library, ModelParams, RunConfig, RunResult, StrategyId};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::battery::execute;
use crate::error::Result;
use crate::spec::{BatterySpec, Cell, Program, RowKey};
use crate::summary::SummaryTable;

pub const GAMMA_RANGE: (f64, f64) = (0.90, 0.97);
pub const ALPHA_RANGE: (f64, f64) = (0.35, 1.60);

/// Relative jitter half-widths and absolute ranges of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jitter {
    pub affinity: f64,
    pub reward: f64,
    pub wellbeing: f64,
    pub thresholds: f64,
    pub gamma: Option<(f64, f64)>,
    pub alpha: Option<(f64, f64)>,
    pub t_explore: Option<(u32, u32)>,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter {
            affinity: 0.28,
            reward: 0.35,
            wellbeing: 0.35,
            thresholds: 0.20,
            gamma: Some(GAMMA_RANGE),
            alpha: Some(ALPHA_RANGE),
            t_explore: Some((2, 4)),
        }
    }
}

impl Jitter {
    pub const ZERO: Jitter = Jitter {
        affinity: 0.0,
        reward: 0.0,
        wellbeing: 0.0,
        thresholds: 0.0,
        gamma: None,
        alpha: None,
        t_explore: None,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub base: ModelParams,
    pub jitter: Jitter,
    /// Candidates drawn in total, the base configuration included.
    pub candidates: usize,
    /// Extra candidates evaluated as given, after the base.
    #[serde(default)]
    pub explicit: Vec<ModelParams>,
    pub search_seed: u64,
    pub seeds: Vec<u64>,
    pub scenarios: Vec<String>,
    pub strategy: StrategyId,
    pub level: Level,
    /// Aggregate column averaged over all runs of a candidate.
    pub objective: String,
    pub maximize: bool,
    /// Fixed screen thresholds that define feasibility.
    pub screens: ScreenThresholds,
}

impl SearchSpec {
    pub fn new(base: ModelParams) -> Self {
        SearchSpec {
            base,
            jitter: Jitter::default(),
            candidates: 16,
            explicit: Vec::new(),
            search_seed: 0,
            seeds: crate::spec::default_seeds()[..10].to_vec(),
            scenarios: vec!["Standard Sprint".into(), "Standard Production".into()],
            strategy: StrategyId::new(haas_core::Algorithm::Linucb, true),
            level: Level::L2,
            objective: "cum_regret".into(),
            maximize: false,
            screens: base.screens,
        }
    }

    pub fn from_battery(spec: &BatterySpec) -> Self {
        let mut s = SearchSpec::new(spec.params);
        s.candidates = spec.candidates;
        s.seeds = spec.seeds.clone();
        s.scenarios = spec.scenarios.clone();
        s.strategy = spec.strategies[0];
        s.level = spec.levels[0];
        s
    }
}

/// Checks a candidate against the model's own validation and the search
/// ranges for γ and α.
pub fn validate_candidate(p: &ModelParams) -> Result<()> {
    p.validate()?;
    let g = p.bandit.ducb_gamma;
    if !(GAMMA_RANGE.0..=GAMMA_RANGE.1).contains(&g) {
        return Err(HaasError::config("ducb_gamma", format!("{g} outside [0.90, 0.97]")).into());
    }
    let a = p.bandit.linucb_alpha;
    if !(ALPHA_RANGE.0..=ALPHA_RANGE.1).contains(&a) {
        return Err(HaasError::config("linucb_alpha", format!("{a} outside [0.35, 1.60]")).into());
    }
    Ok(())
}

fn scale<R: Rng>(rng: &mut R, j: f64) -> f64 {
    if j > 0.0 {
        1.0 + rng.random_range(-j..=j)
    } else {
        1.0
    }
}

/// Draws one jittered candidate around `base`.
pub fn jitter<R: Rng>(base: &ModelParams, j: &Jitter, rng: &mut R) -> Result<ModelParams> {
    let mut p = *base;
    let fractions: [f64; 5] = std::array::from_fn(|_| scale(rng, j.affinity) - 1.0);
    p.affinity = perturb_weights(&base.affinity, fractions)?;

    let raw: [f64; 4] = std::array::from_fn(|i| base.reward.as_array()[i] * scale(rng, j.reward));
    let total: f64 = raw.iter().sum();
    p.reward = RewardProfile::from_array(raw.map(|w| w / total));

    let w = &mut p.wellbeing;
    for x in [&mut w.fatigue, &mut w.monotony, &mut w.deskilling, &mut w.exclusion, &mut w.relief] {
        *x *= scale(rng, j.wellbeing);
    }
    w.high_value_threshold = (w.high_value_threshold * scale(rng, j.thresholds)).clamp(0.0, 1.0);
    p.shares.hybrid_trigger = (p.shares.hybrid_trigger * scale(rng, j.thresholds)).clamp(0.0, 1.0);
    p.shares.peer_delta = (p.shares.peer_delta * scale(rng, j.thresholds)).clamp(0.0, 1.0);

    if let Some((lo, hi)) = j.gamma {
        p.bandit.ducb_gamma = rng.random_range(lo..=hi);
    }
    if let Some((lo, hi)) = j.alpha {
        p.bandit.linucb_alpha = rng.random_range(lo..=hi);
    }
    if let Some((lo, hi)) = j.t_explore {
        p.bandit.t_explore = rng.random_range(lo..=hi);
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Base,
    Explicit,
    Jitter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub index: usize,
    pub origin: Origin,
    pub params: ModelParams,
    pub objective: f64,
    pub feasible: bool,
    /// Runs failing each screen condition; empty when feasible.
    pub violations: BTreeMap<String, u32>,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub objective: String,
    pub maximize: bool,
    pub best: usize,
    pub best_params: ModelParams,
    pub any_feasible: bool,
    /// Candidate indices in rank order.
    pub ranking: Vec<usize>,
    pub candidates: Vec<CandidateReport>,
}

impl CalibrationReport {
    pub fn best_candidate(&self) -> &CandidateReport {
        &self.candidates[self.best]
    }
}

/// Feasible before infeasible; among infeasible, fewer violations first; then
/// objective; then index.
pub fn rank_cmp(a: &CandidateReport, b: &CandidateReport, maximize: bool) -> Ordering {
    let total = |c: &CandidateReport| c.violations.values().sum::<u32>();
    let obj = if maximize {
        b.objective.total_cmp(&a.objective)
    } else {
        a.objective.total_cmp(&b.objective)
    };
    b.feasible
        .cmp(&a.feasible)
        .then_with(|| if a.feasible { Ordering::Equal } else { total(a).cmp(&total(b)) })
        .then(obj)
        .then(a.index.cmp(&b.index))
}

pub struct SearchOutcome {
    pub report: CalibrationReport,
    pub table: SummaryTable,
    pub runs: Vec<RunResult>,
}

/// The candidate list: base, explicit, then jittered draws up to the
/// requested count.
pub fn candidates(spec: &SearchSpec) -> Result<Vec<(Origin, ModelParams)>> {
    let mut out = vec![(Origin::Base, spec.base)];
    out.extend(spec.explicit.iter().map(|p| (Origin::Explicit, *p)));
    let mut rng = StreamPlan::stream(spec.search_seed, "calibration");
    for _ in 1..spec.candidates.max(1) {
        out.push((Origin::Jitter, jitter(&spec.base, &spec.jitter, &mut rng)?));
    }
    for (_, p) in &out {
        validate_candidate(p)?;
    }
    Ok(out)
}

pub fn search(spec: &SearchSpec, lib: &Library, jobs: usize) -> Result<SearchOutcome> {
    if spec.seeds.is_empty() {
        return Err(crate::error::BenchError::spec("seeds", "at least one seed is required"));
    }
    let pool = candidates(spec)?;
    let mut cells = Vec::new();
    for (i, (_, params)) in pool.iter().enumerate() {
        for name in &spec.scenarios {
            let scenario = lib.scenario(name)?;
            let mut config = RunConfig::new(&scenario.name, spec.strategy, 0);
            config.governance_level = spec.level;
            config.reward_profile = "custom".into();
            config.params = *params;
            config.validate(lib)?;
            cells.push(Cell {
                key: RowKey {
                    domain: scenario.domain,
                    scenario: scenario.name.clone(),
                    strategy: spec.strategy,
                    level: config.effective_level(),
                    ablation: "full".into(),
                    reward_profile: "custom".into(),
                    variant: format!("candidate-{i:02}"),
                },
                config,
            });
        }
    }
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

    let per_candidate = spec.scenarios.len() * spec.seeds.len();
    let mut reports = Vec::with_capacity(pool.len());
    for (i, (origin, params)) in pool.iter().enumerate() {
        let mine = &runs[i * per_candidate..(i + 1) * per_candidate];
        let mut objective = 0.0;
        let mut violations: BTreeMap<String, u32> = BTreeMap::new();
        for r in mine {
            objective += r
                .aggregate
                .column(&spec.objective)
                .ok_or_else(|| HaasError::config("objective", format!("unknown column `{}`", spec.objective)))?;
            for f in screen_failures(&r.aggregate, &spec.screens) {
                *violations.entry(f.to_string()).or_default() += 1;
            }
        }
        reports.push(CandidateReport {
            index: i,
            origin: *origin,
            params: *params,
            objective: objective / mine.len() as f64,
            feasible: violations.is_empty(),
            violations,
            runs: mine.len(),
        });
    }
    let mut ranking: Vec<usize> = (0..reports.len()).collect();
    ranking.sort_by(|&a, &b| rank_cmp(&reports[a], &reports[b], spec.maximize));
    let best = ranking[0];
    let report = CalibrationReport {
        objective: spec.objective.clone(),
        maximize: spec.maximize,
        best,
        best_params: reports[best].params,
        any_feasible: reports.iter().any(|c| c.feasible),
        ranking,
        candidates: reports,
    };
    let mut table = SummaryTable::build(Program::Calibrate, &cells, &spec.seeds, &runs);
    table.calibration = Some(report.clone());
    Ok(SearchOutcome { report, table, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn report(index: usize, objective: f64, violations: &[(&str, u32)]) -> CandidateReport {
        let violations: BTreeMap<String, u32> = violations.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        CandidateReport {
            index,
            origin: Origin::Jitter,
            params: ModelParams::default(),
            objective,
            feasible: violations.is_empty(),
            violations,
            runs: 1,
        }
    }

    #[test]
    fn feasible_beats_better_infeasible() {
        let feasible = report(1, 2.0, &[]);
        let infeasible = report(0, 0.5, &[("quality", 1)]);
        assert_eq!(rank_cmp(&feasible, &infeasible, false), Ordering::Less);
        assert_eq!(rank_cmp(&infeasible, &feasible, false), Ordering::Greater);
        let a = report(2, 1.0, &[]);
        assert_eq!(rank_cmp(&a, &feasible, false), Ordering::Less);
        assert_eq!(rank_cmp(&a, &feasible, true), Ordering::Greater);
    }

    #[test]
    fn fewer_violations_rank_first_among_infeasible() {
        let few = report(0, 9.0, &[("quality", 1)]);
        let many = report(1, 0.1, &[("quality", 2), ("monotony", 3)]);
        assert_eq!(rank_cmp(&few, &many, false), Ordering::Less);
    }

    #[test]
    fn zero_jitter_is_identity() {
        let base = ModelParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let p = jitter(&base, &Jitter::ZERO, &mut rng).unwrap();
        assert!((p.affinity.repetitiveness - base.affinity.repetitiveness).abs() < 1e-12);
        assert!((p.reward.w_w - base.reward.w_w).abs() < 1e-12);
        assert_eq!(p.bandit, base.bandit);
    }

    #[test]
    fn jittered_candidates_stay_in_range() {
        let base = ModelParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = jitter(&base, &Jitter::default(), &mut rng).unwrap();
            validate_candidate(&p).unwrap();
            let a = p.affinity.as_array();
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (x, b) in a.iter().zip(base.affinity.as_array()) {
                let lo = b * 0.72 / 1.28;
                let hi = b * 1.28 / 0.72;
                assert!(*x >= lo - 1e-12 && *x <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn alpha_outside_range_is_rejected() {
        let mut p = ModelParams::default();
        p.bandit.linucb_alpha = 2.0;
        let err = validate_candidate(&p).unwrap_err();
        assert_eq!(err.field(), Some("linucb_alpha"));
        let mut spec = SearchSpec::new(ModelParams::default());
        spec.explicit.push(p);
        assert_eq!(candidates(&spec).unwrap_err().field(), Some("linucb_alpha"));
    }
}
