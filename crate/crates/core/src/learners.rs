//! Bandit allocators, the heuristic warm-start, fixed baselines and the
//! mode-optimal oracle.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::catalog::{affinity_band, AffinityBand, CognitiveProfile};
use crate::error::{HaasError, Result};
use crate::modes::{CollaborationMode, ModeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Ucb1,
    Ducb,
    Linucb,
    Thompson,
    AffinityHeuristic,
    Random,
    HumanScheduler,
    FixedHuman,
    AiOnly,
    Oracle,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Ucb1,
        Algorithm::Ducb,
        Algorithm::Linucb,
        Algorithm::Thompson,
        Algorithm::AffinityHeuristic,
        Algorithm::Random,
        Algorithm::HumanScheduler,
        Algorithm::FixedHuman,
        Algorithm::AiOnly,
        Algorithm::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Ucb1 => "ucb1",
            Algorithm::Ducb => "ducb",
            Algorithm::Linucb => "linucb",
            Algorithm::Thompson => "thompson",
            Algorithm::AffinityHeuristic => "affinity_heuristic",
            Algorithm::Random => "random",
            Algorithm::HumanScheduler => "human_scheduler",
            Algorithm::FixedHuman => "fixed_human",
            Algorithm::AiOnly => "ai_only",
            Algorithm::Oracle => "oracle",
        }
    }

    /// Learned allocators use the warm-start and then their bandit rule.
    pub fn is_learned(self) -> bool {
        matches!(self, Algorithm::Ucb1 | Algorithm::Ducb | Algorithm::Linucb | Algorithm::Thompson)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = HaasError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == norm)
            .or(match norm.as_str() {
                "d_ucb" | "discounted_ucb" => Some(Algorithm::Ducb),
                "affinity" | "heuristic" => Some(Algorithm::AffinityHeuristic),
                "ai" | "aionly" => Some(Algorithm::AiOnly),
                "human" | "fixedhuman" => Some(Algorithm::FixedHuman),
                _ => None,
            })
            .ok_or_else(|| HaasError::config("strategy", format!("unknown strategy `{s}`")))
    }
}

/// Strategy plus the policies on/off flag, written `linucb+on`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StrategyId {
    pub algorithm: Algorithm,
    pub policies: bool,
}

impl StrategyId {
    pub fn new(algorithm: Algorithm, policies: bool) -> Self {
        StrategyId { algorithm, policies }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.algorithm, if self.policies { "on" } else { "off" })
    }
}

impl std::str::FromStr for StrategyId {
    type Err = HaasError;

    /// A bare algorithm name means policies on.
    fn from_str(s: &str) -> Result<Self> {
        let (name, flag) = match s.split_once('+') {
            Some((n, f)) => (n, Some(f)),
            None => (s, None),
        };
        let policies = match flag.map(|f| f.trim().to_ascii_lowercase()) {
            None => true,
            Some(f) if f == "on" => true,
            Some(f) if f == "off" => false,
            Some(f) => {
                return Err(HaasError::config("policies", format!("`{f}` is not on/off")));
            }
        };
        Ok(StrategyId { algorithm: name.parse()?, policies })
    }
}

impl Serialize for StrategyId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StrategyId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BanditParams {
    pub ucb_c: f64,
    pub ducb_gamma: f64,
    pub linucb_alpha: f64,
    pub t_explore: u32,
    pub context_fatigue: bool,
    pub warmstart_updates: bool,
}

impl Default for BanditParams {
    fn default() -> Self {
        BanditParams {
            ucb_c: 1.5,
            ducb_gamma: 0.97,
            linucb_alpha: 0.8,
            t_explore: 3,
            context_fatigue: true,
            warmstart_updates: true,
        }
    }
}

impl BanditParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ucb_c >= 0.0 && self.ucb_c.is_finite()) {
            return Err(HaasError::config("ucb_c", "must be >= 0"));
        }
        if !(self.ducb_gamma > 0.0 && self.ducb_gamma <= 1.0) {
            return Err(HaasError::config("ducb_gamma", "must lie in (0, 1]"));
        }
        if !(self.linucb_alpha >= 0.0 && self.linucb_alpha.is_finite()) {
            return Err(HaasError::config("linucb_alpha", "must be >= 0"));
        }
        Ok(())
    }

    pub fn context_dim(&self) -> usize {
        if self.context_fatigue {
            6
        } else {
            5
        }
    }
}

/// The five profile scores, optionally followed by current fatigue.
pub fn context_vector(profile: &CognitiveProfile, fatigue: f64, with_fatigue: bool) -> DVector<f64> {
    let p = profile.as_array();
    if with_fatigue {
        DVector::from_row_slice(&[p[0], p[1], p[2], p[3], p[4], fatigue])
    } else {
        DVector::from_row_slice(&p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub pulls: u64,
    /// Pull count, discounted under D-UCB.
    pub n: f64,
    /// Reward sum, discounted under D-UCB.
    pub sum: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Arm {
    fn new(dim: usize) -> Self {
        Arm {
            pulls: 0,
            n: 0.0,
            sum: 0.0,
            alpha: 1.0,
            beta: 1.0,
            a: DMatrix::identity(dim, dim),
            b: DVector::zeros(dim),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n > 0.0 {
            self.sum / self.n
        } else {
            0.0
        }
    }

    fn a_inv(&self) -> DMatrix<f64> {
        self.a
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .expect("ridge matrix is positive definite")
    }

    pub fn linucb_score(&self, x: &DVector<f64>, alpha: f64) -> f64 {
        let inv = self.a_inv();
        let theta = &inv * &self.b;
        theta.dot(x) + alpha * x.dot(&(&inv * x)).max(0.0).sqrt()
    }
}

/// Per task type, one arm per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditState {
    pub dim: usize,
    pub arms: BTreeMap<String, Vec<Arm>>,
}

impl BanditState {
    pub fn new(dim: usize) -> Self {
        BanditState { dim, arms: BTreeMap::new() }
    }

    pub fn arms_mut(&mut self, task_type: &str) -> &mut Vec<Arm> {
        let dim = self.dim;
        self.arms
            .entry(task_type.to_string())
            .or_insert_with(|| (0..CollaborationMode::ALL.len()).map(|_| Arm::new(dim)).collect())
    }

    pub fn arms(&self, task_type: &str) -> Option<&Vec<Arm>> {
        self.arms.get(task_type)
    }
}

/// Highest score over the feasible modes; earlier (lower-autonomy) modes
/// win ties.
fn argmax(feasible: ModeSet, mut score: impl FnMut(CollaborationMode) -> f64) -> CollaborationMode {
    let mut best: Option<(CollaborationMode, f64)> = None;
    for m in feasible.iter() {
        let s = score(m);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((m, s));
        }
    }
    best.expect("feasible set is non-empty").0
}

/// UCB1 and D-UCB selection. Unpulled feasible arms go first, in mode order.
pub fn ucb_select(arms: &[Arm], feasible: ModeSet, c: f64) -> CollaborationMode {
    if let Some(m) = feasible.iter().find(|m| arms[m.index()].pulls == 0) {
        return m;
    }
    let total: f64 = arms.iter().map(|a| a.n).sum();
    argmax(feasible, |m| {
        let a = &arms[m.index()];
        if a.n <= 0.0 {
            return f64::INFINITY;
        }
        a.mean() + c * (total.max(1.0).ln() / a.n).sqrt()
    })
}

/// LinUCB selection. Exact ties, which occur between untouched arms, go to
/// the higher-autonomy mode so the cheapest execution path is tried first.
pub fn linucb_select(arms: &[Arm], feasible: ModeSet, x: &DVector<f64>, alpha: f64) -> CollaborationMode {
    let mut best: Option<(CollaborationMode, f64)> = None;
    for m in feasible.iter() {
        let s = arms[m.index()].linucb_score(x, alpha);
        if best.is_none_or(|(_, b)| s >= b) {
            best = Some((m, s));
        }
    }
    best.expect("feasible set is non-empty").0
}

pub fn thompson_select<R: Rng + ?Sized>(arms: &[Arm], feasible: ModeSet, rng: &mut R) -> CollaborationMode {
    argmax(feasible, |m| {
        let a = &arms[m.index()];
        Beta::new(a.alpha, a.beta).expect("beta parameters are positive").sample(rng)
    })
}

/// Heuristic preference from the affinity score.
pub fn preferred_mode(alpha_ai: f64) -> CollaborationMode {
    if alpha_ai >= 0.80 {
        CollaborationMode::Autonomous
    } else if alpha_ai <= 0.20 {
        CollaborationMode::HumanOnly
    } else {
        match affinity_band(alpha_ai) {
            AffinityBand::AiCentric => CollaborationMode::Supervised,
            AffinityBand::Balanced => CollaborationMode::Peer,
            AffinityBand::HumanCentric => CollaborationMode::Copilot,
        }
    }
}

/// Preferred mode, shifted one step down under tutor mode, then moved to the
/// nearest feasible mode.
pub fn warm_start_select(alpha_ai: f64, tutor: bool, feasible: ModeSet) -> CollaborationMode {
    let mut pref = preferred_mode(alpha_ai);
    if tutor {
        pref = pref.step_down();
    }
    feasible.nearest(pref).expect("feasible set is non-empty")
}

/// Reward-maximising feasible mode; ties go to lower autonomy.
pub fn oracle_select(feasible: ModeSet, evaluate: impl FnMut(CollaborationMode) -> f64) -> CollaborationMode {
    argmax(feasible, evaluate)
}

/// A selection together with the unconstrained preference it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub mode: CollaborationMode,
    /// Mode the strategy would have used with every mode feasible, when it
    /// has a fixed preference.
    pub preferred: Option<CollaborationMode>,
    pub warm_start: bool,
}

impl Selection {
    /// The governance layer moved the strategy off its preference.
    pub fn overridden(&self) -> bool {
        self.preferred.is_some_and(|p| p != self.mode)
    }
}

/// What the allocator sees about the current subtask.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    pub task_type: &'a str,
    pub profile: &'a CognitiveProfile,
    pub alpha_ai: f64,
    pub fatigue: f64,
    pub tutor: bool,
    pub sprint: u32,
    pub feasible: ModeSet,
}

/// One strategy with its learning state, exclusively owned by a run.
#[derive(Debug, Clone)]
pub struct Allocator {
    pub algorithm: Algorithm,
    pub params: BanditParams,
    pub state: BanditState,
    frozen: BTreeMap<String, CollaborationMode>,
}

impl Allocator {
    pub fn new(algorithm: Algorithm, params: BanditParams) -> Self {
        Allocator {
            algorithm,
            params,
            state: BanditState::new(params.context_dim()),
            frozen: BTreeMap::new(),
        }
    }

    fn context(&self, d: &Decision<'_>) -> DVector<f64> {
        context_vector(d.profile, d.fatigue, self.params.context_fatigue)
    }

    /// Picks a feasible mode. `oracle` scores modes for the oracle strategy
    /// and is ignored otherwise.
    pub fn select<R: Rng + ?Sized>(
        &mut self,
        d: &Decision<'_>,
        rng: &mut R,
        oracle: Option<&mut dyn FnMut(CollaborationMode) -> f64>,
    ) -> Selection {
        assert!(!d.feasible.is_empty(), "feasible set must be non-empty");
        let fixed = |pref: CollaborationMode, warm: bool| Selection {
            mode: d.feasible.nearest(pref).expect("non-empty"),
            preferred: Some(pref),
            warm_start: warm,
        };
        let heuristic_pref = || {
            let p = preferred_mode(d.alpha_ai);
            if d.tutor {
                p.step_down()
            } else {
                p
            }
        };
        match self.algorithm {
            Algorithm::FixedHuman => fixed(CollaborationMode::HumanOnly, false),
            Algorithm::AiOnly => fixed(CollaborationMode::Autonomous, false),
            Algorithm::AffinityHeuristic => fixed(heuristic_pref(), false),
            Algorithm::HumanScheduler => {
                let pref = *self
                    .frozen
                    .entry(d.task_type.to_string())
                    .or_insert_with(heuristic_pref);
                fixed(pref, false)
            }
            Algorithm::Random => {
                let modes: Vec<CollaborationMode> = d.feasible.iter().collect();
                Selection {
                    mode: modes[rng.random_range(0..modes.len())],
                    preferred: None,
                    warm_start: false,
                }
            }
            Algorithm::Oracle => {
                let eval = oracle.expect("oracle strategy needs an evaluator");
                Selection {
                    mode: oracle_select(d.feasible, eval),
                    preferred: None,
                    warm_start: false,
                }
            }
            learned => {
                if d.sprint < self.params.t_explore {
                    return fixed(heuristic_pref(), true);
                }
                let x = self.context(d);
                let params = self.params;
                let arms = self.state.arms_mut(d.task_type);
                let mode = match learned {
                    Algorithm::Ucb1 | Algorithm::Ducb => ucb_select(arms, d.feasible, params.ucb_c),
                    Algorithm::Linucb => linucb_select(arms, d.feasible, &x, params.linucb_alpha),
                    Algorithm::Thompson => thompson_select(arms, d.feasible, rng),
                    _ => unreachable!(),
                };
                Selection { mode, preferred: None, warm_start: false }
            }
        }
    }

    /// Feeds back the reward of the executed mode. Warm-start observations
    /// are skipped when `warmstart_updates` is off.
    pub fn update(&mut self, d: &Decision<'_>, selection: &Selection, reward: f64) {
        if !self.algorithm.is_learned() {
            return;
        }
        if selection.warm_start && !self.params.warmstart_updates {
            return;
        }
        let x = self.context(d);
        let discount = (self.algorithm == Algorithm::Ducb).then_some(self.params.ducb_gamma);
        update_arms(self.state.arms_mut(d.task_type), selection.mode, &x, reward, discount);
    }
}

/// Applies one observation. With `discount`, every arm of the task type is
/// discounted first.
pub fn update_arms(arms: &mut [Arm], mode: CollaborationMode, x: &DVector<f64>, reward: f64, discount: Option<f64>) {
    let r = reward.clamp(0.0, 1.0);
    if let Some(g) = discount {
        for a in arms.iter_mut() {
            a.n *= g;
            a.sum *= g;
        }
    }
    let a = &mut arms[mode.index()];
    a.pulls += 1;
    a.n += 1.0;
    a.sum += r;
    a.alpha += r;
    a.beta += 1.0 - r;
    a.a += x * x.transpose();
    a.b += x * r;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use CollaborationMode::*;

    fn arms(dim: usize) -> Vec<Arm> {
        (0..5).map(|_| Arm::new(dim)).collect()
    }

    #[test]
    fn ucb_hand_example() {
        let mut a = arms(6);
        a[0].pulls = 10;
        a[0].n = 10.0;
        a[0].sum = 5.0;
        a[1].pulls = 2;
        a[1].n = 2.0;
        a[1].sum = 0.8;
        let feasible: ModeSet = [HumanOnly, Copilot].into_iter().collect();
        let u = |q: f64, n: f64| q + 1.5 * (12f64.ln() / n).sqrt();
        assert_abs_diff_eq!(u(0.5, 10.0), 1.248, epsilon = 5e-4);
        assert_abs_diff_eq!(u(0.4, 2.0), 2.072, epsilon = 5e-4);
        assert_eq!(ucb_select(&a, feasible, 1.5), Copilot);
    }

    #[test]
    fn unpulled_arm_first() {
        let mut a = arms(6);
        for m in [HumanOnly, Copilot, Supervised] {
            a[m.index()].pulls = 3;
            a[m.index()].n = 3.0;
            a[m.index()].sum = 3.0;
        }
        assert_eq!(ucb_select(&a, ModeSet::ALL, 1.5), Peer);
    }

    #[test]
    fn singleton_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let only = ModeSet::single(Peer);
        let a = arms(6);
        let x = DVector::from_element(6, 0.5);
        assert_eq!(ucb_select(&a, only, 1.5), Peer);
        assert_eq!(linucb_select(&a, only, &x, 0.8), Peer);
        assert_eq!(thompson_select(&a, only, &mut rng), Peer);
        assert_eq!(oracle_select(only, |_| 0.0), Peer);
    }

    #[test]
    fn linucb_untouched_ties_go_up() {
        let x = DVector::from_element(6, 0.5);
        let mut a = arms(6);
        assert_eq!(linucb_select(&a, ModeSet::ALL, &x, 0.8), Autonomous);
        assert_eq!(linucb_select(&a, ModeSet::up_to(Supervised), &x, 0.8), Supervised);
        update_arms(&mut a, Autonomous, &x, 0.1, None);
        assert_eq!(linucb_select(&a, ModeSet::ALL, &x, 0.8), Supervised);
    }

    #[test]
    fn update_examples() {
        let x = DVector::from_row_slice(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let mut a = arms(6);
        update_arms(&mut a, Copilot, &x, 1.0, None);
        assert_eq!(a[1].pulls, 1);
        assert_eq!(a[1].mean(), 1.0);
        let mut a = arms(6);
        update_arms(&mut a, Copilot, &x, 0.7, None);
        assert_abs_diff_eq!(a[1].alpha, 1.7, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].beta, 1.3, epsilon = 1e-12);
        let expect = DMatrix::<f64>::identity(6, 6) + &x * x.transpose();
        assert_eq!(a[1].a, expect);
    }

    #[test]
    fn ducb_discounts_all_arms() {
        let x = DVector::from_element(6, 0.0);
        let mut a = arms(6);
        update_arms(&mut a, HumanOnly, &x, 1.0, Some(0.97));
        update_arms(&mut a, Copilot, &x, 0.5, Some(0.97));
        assert_abs_diff_eq!(a[0].n, 0.97, epsilon = 1e-12);
        assert_abs_diff_eq!(a[0].sum, 0.97, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1].n, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn warm_start_examples() {
        assert_eq!(warm_start_select(0.755, false, ModeSet::ALL), Supervised);
        assert_eq!(warm_start_select(0.23, false, ModeSet::ALL), Copilot);
        assert_eq!(warm_start_select(0.755, false, ModeSet::single(HumanOnly)), HumanOnly);
        assert_eq!(warm_start_select(0.85, false, ModeSet::ALL), Autonomous);
        assert_eq!(warm_start_select(0.15, false, ModeSet::ALL), HumanOnly);
        assert_eq!(warm_start_select(0.5, false, ModeSet::ALL), Peer);
        assert_eq!(warm_start_select(0.755, true, ModeSet::ALL), Peer);
    }

    fn decision<'a>(p: &'a CognitiveProfile, feasible: ModeSet, sprint: u32) -> Decision<'a> {
        Decision {
            task_type: "Testing",
            profile: p,
            alpha_ai: 0.755,
            fatigue: 0.2,
            tutor: false,
            sprint,
            feasible,
        }
    }

    #[test]
    fn ai_only_nearest_under_cap() {
        let p = CognitiveProfile::new(0.9, 0.3, 0.1, 0.1, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut al = Allocator::new(Algorithm::AiOnly, BanditParams::default());
        let s = al.select(&decision(&p, ModeSet::ALL, 0), &mut rng, None);
        assert_eq!((s.mode, s.overridden()), (Autonomous, false));
        let s = al.select(&decision(&p, ModeSet::up_to(Supervised), 0), &mut rng, None);
        assert_eq!((s.mode, s.overridden()), (Supervised, true));
    }

    #[test]
    fn random_is_reproducible() {
        let p = CognitiveProfile::new(0.5, 0.5, 0.5, 0.5, 0.5);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let mut al = Allocator::new(Algorithm::Random, BanditParams::default());
            (0..50)
                .map(|_| al.select(&decision(&p, ModeSet::ALL, 5), &mut rng, None).mode)
                .collect::<Vec<_>>()
        };
        let a = run();
        assert_eq!(a, run());
        assert!(a.iter().collect::<std::collections::BTreeSet<_>>().len() > 1);
    }

    #[test]
    fn human_scheduler_freezes_first_choice() {
        let p = CognitiveProfile::new(0.5, 0.5, 0.5, 0.5, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut al = Allocator::new(Algorithm::HumanScheduler, BanditParams::default());
        let mut d = decision(&p, ModeSet::ALL, 0);
        assert_eq!(al.select(&d, &mut rng, None).mode, Supervised);
        d.alpha_ai = 0.1;
        d.sprint = 4;
        assert_eq!(al.select(&d, &mut rng, None).mode, Supervised);
    }

    #[test]
    fn oracle_ties_go_low() {
        assert_eq!(oracle_select(ModeSet::ALL, |_| 0.5), HumanOnly);
        assert_eq!(oracle_select(ModeSet::ALL, |m| if m == Peer { 0.9 } else { 0.1 }), Peer);
    }

    #[test]
    fn strategy_ids_parse() {
        let s: StrategyId = "linucb+off".parse().unwrap();
        assert_eq!(s, StrategyId::new(Algorithm::Linucb, false));
        assert_eq!(s.to_string(), "linucb+off");
        assert!("ai_only".parse::<StrategyId>().unwrap().policies);
        assert!("linucb+maybe".parse::<StrategyId>().is_err());
        assert!("greedy".parse::<StrategyId>().is_err());
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
        }
    }

    /// Bernoulli arms with means 0.8, 0.6, 0.4, 0.3, 0.2 (best gap 0.2).
    fn best_arm_rate(mut pick: impl FnMut(&[Arm], &mut ChaCha8Rng) -> CollaborationMode, dim: usize, x: &DVector<f64>) -> f64 {
        let means = [0.2, 0.3, 0.8, 0.6, 0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut a = arms(dim);
        let mut hits = 0;
        for t in 0..1000 {
            let m = pick(&a, &mut rng);
            let r = if rng.random::<f64>() < means[m.index()] { 1.0 } else { 0.0 };
            update_arms(&mut a, m, x, r, None);
            if t >= 900 && m == Peer {
                hits += 1;
            }
        }
        hits as f64 / 100.0
    }

    #[test]
    fn stationary_convergence() {
        let x = DVector::from_row_slice(&[1.0]);
        assert!(best_arm_rate(|a, _| ucb_select(a, ModeSet::ALL, 1.5), 1, &x) >= 0.9);
        assert!(best_arm_rate(|a, r| thompson_select(a, ModeSet::ALL, r), 1, &x) >= 0.9);
        assert!(best_arm_rate(|a, _| linucb_select(a, ModeSet::ALL, &x, 0.8), 1, &x) >= 0.9);
    }

    proptest! {
        #[test]
        fn selection_is_feasible(bits in 1u8..32, alpha in 0.0f64..=1.0, sprint in 0u32..8, seed in 0u64..1000, ai in 0usize..10) {
            let feasible: ModeSet = CollaborationMode::ALL.into_iter().filter(|m| bits & (1 << m.index()) != 0).collect();
            let p = CognitiveProfile::new(0.5, 0.5, 0.5, 0.5, 0.5);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut al = Allocator::new(Algorithm::ALL[ai], BanditParams::default());
            let d = Decision { task_type: "Testing", profile: &p, alpha_ai: alpha, fatigue: 0.3, tutor: false, sprint, feasible };
            for _ in 0..5 {
                let mut eval = |m: CollaborationMode| m.index() as f64 * 0.1;
                let s = al.select(&d, &mut rng, Some(&mut eval));
                prop_assert!(feasible.contains(s.mode));
                al.update(&d, &s, 0.6);
            }
        }
    }
}
