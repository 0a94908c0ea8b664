//! Every tunable constant of the simulator, grouped as in the run config
//! file. Missing keys take their defaults.

use serde::{Deserialize, Serialize};

use crate::catalog::AffinityWeights;
use crate::error::Result;
use crate::humanstate::HumanParams;
use crate::learners::BanditParams;
use crate::metrics::{KpiParams, ScreenThresholds};
use crate::modes::ShareBounds;
use crate::outcomes::{OutcomeParams, RewardProfile, WellbeingWeights};
use crate::policy::RiskParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelParams {
    pub affinity: AffinityWeights,
    pub shares: ShareBounds,
    pub risk: RiskParams,
    pub bandit: BanditParams,
    pub human: HumanParams,
    pub outcome_model: OutcomeParams,
    pub wellbeing: WellbeingWeights,
    pub reward: RewardProfile,
    pub screens: ScreenThresholds,
    pub kpi: KpiParams,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.affinity.validate()?;
        self.shares.validate()?;
        self.bandit.validate()?;
        self.human.validate()?;
        self.outcome_model.validate()?;
        self.reward.validate()?;
        self.screens.validate()?;
        Ok(())
    }

    pub fn from_json(doc: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(doc)?;
        p.validate()?;
        Ok(p)
    }
}
