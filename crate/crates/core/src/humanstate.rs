//! Fatigue, trust and deskilling dynamics.

use serde::{Deserialize, Serialize};

use crate::catalog::HumanProfile;
use crate::error::{HaasError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChronicModel {
    /// Recovery stops at `λ·peak_fatigue`.
    Floor,
    /// A fraction `λ` of every recovery step is lost.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanParams {
    pub beta_f: f64,
    pub switch_penalty: f64,
    pub switch_cap: f64,
    pub beta_r: f64,
    pub lambda_chronic: f64,
    pub chronic_model: ChronicModel,
    pub rest_hours_per_cycle: f64,
    pub trust_decay: f64,
    pub trust_growth: f64,
    pub trust_damping: f64,
    pub trust_floor: f64,
    pub rho_desk: f64,
    pub desk_threshold: f64,
    pub desk_sprints: u32,
}

impl Default for HumanParams {
    fn default() -> Self {
        HumanParams {
            beta_f: 0.07,
            switch_penalty: 0.015,
            switch_cap: 0.08,
            beta_r: 0.12,
            lambda_chronic: 0.18,
            chronic_model: ChronicModel::Floor,
            rest_hours_per_cycle: 0.5,
            trust_decay: 0.08,
            trust_growth: 0.02,
            trust_damping: 0.60,
            trust_floor: 0.35,
            rho_desk: 0.003,
            desk_threshold: 0.80,
            desk_sprints: 3,
        }
    }
}

impl HumanParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_f", self.beta_f),
            ("switch_penalty", self.switch_penalty),
            ("switch_cap", self.switch_cap),
            ("beta_r", self.beta_r),
            ("lambda_chronic", self.lambda_chronic),
            ("trust_decay", self.trust_decay),
            ("trust_growth", self.trust_growth),
            ("trust_damping", self.trust_damping),
            ("rho_desk", self.rho_desk),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(HaasError::config(name, "must be > 0"));
            }
        }
        if self.switch_cap < self.switch_penalty {
            return Err(HaasError::config("switch_cap", "must be >= switch_penalty"));
        }
        for (name, v) in [
            ("lambda_chronic", self.lambda_chronic),
            ("trust_floor", self.trust_floor),
            ("desk_threshold", self.desk_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(HaasError::config(name, "must lie in [0, 1]"));
            }
        }
        if self.rest_hours_per_cycle < 0.0 {
            return Err(HaasError::config("rest_hours_per_cycle", "must be >= 0"));
        }
        if self.desk_sprints == 0 {
            return Err(HaasError::config("desk_sprints", "must be >= 1"));
        }
        Ok(())
    }
}

/// Who executed the previous subtask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecAgent {
    Human,
    Ai,
    Shared,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanState {
    pub fatigue: f64,
    pub trust: f64,
    pub skill: f64,
    pub peak_fatigue: f64,
    pub consecutive_high_ai_sprints: u32,
    pub last_executing_agent: ExecAgent,
    pub switch_penalty_accrued_this_cycle: f64,
    pub tutor_mode_active: bool,
    /// Total skill lost to deskilling so far.
    pub cumulative_deskilling: f64,
}

impl HumanState {
    pub fn from_profile(p: &HumanProfile) -> Self {
        HumanState {
            fatigue: p.initial_fatigue,
            trust: p.initial_trust,
            skill: p.initial_skill,
            peak_fatigue: p.initial_fatigue,
            consecutive_high_ai_sprints: 0,
            last_executing_agent: ExecAgent::None,
            switch_penalty_accrued_this_cycle: 0.0,
            tutor_mode_active: false,
            cumulative_deskilling: 0.0,
        }
    }

    /// Fatigue increment of `human_hours` of work at complexity `kappa`,
    /// before the switch term. `rate` is the scenario fatigue multiplier.
    pub fn work_increment(params: &HumanParams, human_hours: f64, kappa: f64, resistance: f64, rate: f64) -> f64 {
        params.beta_f * human_hours * (0.5 + kappa) * rate / resistance
    }

    /// Adds work and switching fatigue. Returns the realised increment.
    pub fn accrue_fatigue(
        &mut self,
        params: &HumanParams,
        human_hours: f64,
        kappa: f64,
        switched: bool,
        resistance: f64,
        rate: f64,
    ) -> f64 {
        let mut inc = Self::work_increment(params, human_hours.max(0.0), kappa, resistance, rate);
        if switched {
            let room = (params.switch_cap - self.switch_penalty_accrued_this_cycle).max(0.0);
            let sw = params.switch_penalty.min(room);
            self.switch_penalty_accrued_this_cycle += sw;
            inc += sw;
        }
        let before = self.fatigue;
        self.fatigue = (self.fatigue + inc).min(1.0);
        self.peak_fatigue = self.peak_fatigue.max(self.fatigue);
        self.fatigue - before
    }

    pub fn recover(&mut self, params: &HumanParams, rest_hours: f64) {
        let rest = rest_hours.max(0.0);
        self.fatigue = match params.chronic_model {
            ChronicModel::Floor => {
                let floor = params.lambda_chronic * self.peak_fatigue;
                if self.fatigue <= floor {
                    self.fatigue
                } else {
                    (self.fatigue - params.beta_r * rest).max(floor)
                }
            }
            ChronicModel::Additive => {
                (self.fatigue - params.beta_r * rest * (1.0 - params.lambda_chronic)).max(0.0)
            }
        };
    }

    /// Resets the per-cycle switch accrual.
    pub fn start_cycle(&mut self) {
        self.switch_penalty_accrued_this_cycle = 0.0;
    }

    pub fn update_trust(&mut self, params: &HumanParams, success: bool) {
        self.trust = if success {
            (self.trust + params.trust_growth * params.trust_damping).min(1.0)
        } else {
            (self.trust - params.trust_decay * params.trust_damping).max(params.trust_floor)
        };
    }

    /// End-of-sprint deskilling check. Returns the skill lost this sprint.
    pub fn update_deskilling(&mut self, params: &HumanParams, sprint_ai_fraction: f64, subtasks_in_sprint: u32) -> f64 {
        if sprint_ai_fraction > params.desk_threshold {
            self.consecutive_high_ai_sprints += 1;
        } else {
            self.consecutive_high_ai_sprints = 0;
            self.tutor_mode_active = false;
            return 0.0;
        }
        if self.consecutive_high_ai_sprints < params.desk_sprints {
            return 0.0;
        }
        let before = self.skill;
        self.skill = (self.skill - params.rho_desk * subtasks_in_sprint as f64).max(0.0);
        self.tutor_mode_active = true;
        let lost = before - self.skill;
        self.cumulative_deskilling += lost;
        lost
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn state(f: f64) -> HumanState {
        HumanState {
            fatigue: f,
            peak_fatigue: f,
            ..HumanState::from_profile(&HumanProfile::default())
        }
    }

    #[test]
    fn accrual_examples() {
        let p = HumanParams::default();
        let mut s = state(0.3);
        assert_eq!(s.accrue_fatigue(&p, 0.0, 0.7, false, 1.0, 1.0), 0.0);
        assert_eq!(s.fatigue, 0.3);

        let mut s = state(0.10);
        s.accrue_fatigue(&p, 2.0, 0.5, false, 1.0, 1.0);
        assert_abs_diff_eq!(s.fatigue, 0.24, epsilon = 1e-12);

        let mut s = state(0.0);
        for _ in 0..6 {
            s.accrue_fatigue(&p, 0.0, 0.5, true, 1.0, 1.0);
        }
        assert_abs_diff_eq!(s.switch_penalty_accrued_this_cycle, 0.08, epsilon = 1e-12);
        assert_abs_diff_eq!(s.fatigue, 0.08, epsilon = 1e-12);
        s.start_cycle();
        s.accrue_fatigue(&p, 0.0, 0.5, true, 1.0, 1.0);
        assert_abs_diff_eq!(s.fatigue, 0.095, epsilon = 1e-12);
    }

    #[test]
    fn recovery_examples() {
        let p = HumanParams::default();
        let mut s = state(0.50);
        s.recover(&p, 1.0);
        assert_abs_diff_eq!(s.fatigue, 0.38, epsilon = 1e-12);

        let mut s = state(0.20);
        s.peak_fatigue = 1.0;
        s.recover(&p, 10.0);
        assert_abs_diff_eq!(s.fatigue, 0.18, epsilon = 1e-12);

        let mut s = state(0.42);
        s.recover(&p, 0.0);
        assert_eq!(s.fatigue, 0.42);

        let mut s = state(0.0);
        s.peak_fatigue = 0.0;
        s.fatigue = 0.3;
        s.recover(&p, 10.0);
        assert_eq!(s.fatigue, 0.0);
    }

    #[test]
    fn trust_examples() {
        let p = HumanParams::default();
        let mut s = state(0.1);
        s.trust = 0.50;
        s.update_trust(&p, false);
        assert_abs_diff_eq!(s.trust, 0.452, epsilon = 1e-12);
        s.trust = 0.36;
        for _ in 0..20 {
            s.update_trust(&p, false);
            assert!(s.trust >= 0.35);
        }
        assert_abs_diff_eq!(s.trust, 0.35, epsilon = 1e-12);
        s.trust = 1.0;
        s.update_trust(&p, true);
        assert_eq!(s.trust, 1.0);
    }

    #[test]
    fn deskilling_examples() {
        let p = HumanParams::default();
        let mut s = state(0.1);
        let start = s.skill;
        assert_eq!(s.update_deskilling(&p, 0.85, 4), 0.0);
        assert_eq!(s.update_deskilling(&p, 0.85, 4), 0.0);
        assert!(!s.tutor_mode_active);
        let lost = s.update_deskilling(&p, 0.85, 4);
        assert_abs_diff_eq!(lost, 0.012, epsilon = 1e-12);
        assert_abs_diff_eq!(s.skill, start - 0.012, epsilon = 1e-12);
        assert!(s.tutor_mode_active);

        s.update_deskilling(&p, 0.50, 4);
        assert_eq!(s.consecutive_high_ai_sprints, 0);
        assert!(!s.tutor_mode_active);

        let mut s = state(0.1);
        s.consecutive_high_ai_sprints = 2;
        assert!(s.update_deskilling(&p, 0.81, 4) > 0.0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Work(f64, f64, bool),
        Rest(f64),
        Trust(bool),
        Sprint(f64, u32),
        Cycle,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0.0f64..8.0, 0.0f64..=1.0, any::<bool>()).prop_map(|(h, k, s)| Op::Work(h, k, s)),
            (0.0f64..12.0).prop_map(Op::Rest),
            any::<bool>().prop_map(Op::Trust),
            (0.0f64..=1.0, 1u32..10).prop_map(|(f, n)| Op::Sprint(f, n)),
            Just(Op::Cycle),
        ]
    }

    proptest! {
        #[test]
        fn state_stays_bounded(ops in prop::collection::vec(op(), 0..200)) {
            let p = HumanParams::default();
            let mut s = HumanState::from_profile(&HumanProfile::default());
            for o in ops {
                match o {
                    Op::Work(h, k, sw) => { s.accrue_fatigue(&p, h, k, sw, 1.0, 1.4); }
                    Op::Rest(r) => {
                        let prev = s.fatigue;
                        s.recover(&p, r);
                        prop_assert!(s.fatigue >= prev.min(p.lambda_chronic * s.peak_fatigue) - 1e-12);
                    }
                    Op::Trust(ok) => s.update_trust(&p, ok),
                    Op::Sprint(f, n) => { s.update_deskilling(&p, f, n); }
                    Op::Cycle => s.start_cycle(),
                }
                for v in [s.fatigue, s.trust, s.skill, s.peak_fatigue] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
                prop_assert!(s.trust >= 0.35);
                prop_assert!(s.switch_penalty_accrued_this_cycle <= p.switch_cap + 1e-12);
                prop_assert!(!s.tutor_mode_active || s.consecutive_high_ai_sprints >= p.desk_sprints);
            }
        }

        #[test]
        fn recovery_respects_floor(f in 0.0f64..=1.0, extra in 0.0f64..=1.0, rest in 0.0f64..20.0) {
            let p = HumanParams::default();
            let mut s = state(f);
            s.peak_fatigue = (f + extra).min(1.0);
            let floor = p.lambda_chronic * s.peak_fatigue;
            s.recover(&p, rest);
            prop_assert!(s.fatigue >= floor.min(f) - 1e-12);
            prop_assert!(s.fatigue <= f);
        }

        #[test]
        fn trust_asymmetry(t in 0.5f64..0.9) {
            let p = HumanParams::default();
            let mut down = state(0.1);
            down.trust = t;
            down.update_trust(&p, false);
            let mut up = state(0.1);
            up.trust = t;
            up.update_trust(&p, true);
            prop_assert!(t - down.trust > up.trust - t);
        }
    }
}
