//! The five-mode autonomy spectrum and within-mode participation shares.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{CognitiveProfile, Constraint, Subtask};
use crate::error::{HaasError, Result};

pub const SHARE_TOLERANCE: f64 = 1e-9;

/// Collaboration modes ordered by AI autonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CollaborationMode {
    HumanOnly,
    Copilot,
    Peer,
    Supervised,
    Autonomous,
}

impl CollaborationMode {
    pub const ALL: [CollaborationMode; 5] = [
        CollaborationMode::HumanOnly,
        CollaborationMode::Copilot,
        CollaborationMode::Peer,
        CollaborationMode::Supervised,
        CollaborationMode::Autonomous,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Copilot, Peer and Supervised involve both agents.
    pub fn is_shared(self) -> bool {
        matches!(
            self,
            CollaborationMode::Copilot | CollaborationMode::Peer | CollaborationMode::Supervised
        )
    }

    pub fn lead(self) -> Lead {
        match self {
            CollaborationMode::HumanOnly | CollaborationMode::Copilot => Lead::Human,
            CollaborationMode::Peer => Lead::None,
            CollaborationMode::Supervised | CollaborationMode::Autonomous => Lead::Ai,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CollaborationMode::HumanOnly => "HumanOnly",
            CollaborationMode::Copilot => "Copilot",
            CollaborationMode::Peer => "Peer",
            CollaborationMode::Supervised => "Supervised",
            CollaborationMode::Autonomous => "Autonomous",
        }
    }

    /// Steps one autonomy level down, saturating at HumanOnly.
    pub fn step_down(self) -> Self {
        Self::from_index(self.index().saturating_sub(1)).unwrap_or(self)
    }
}

impl fmt::Display for CollaborationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CollaborationMode {
    type Err = HaasError;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "humanonly" | "human" => CollaborationMode::HumanOnly,
            "copilot" => CollaborationMode::Copilot,
            "peer" => CollaborationMode::Peer,
            "supervised" => CollaborationMode::Supervised,
            "autonomous" => CollaborationMode::Autonomous,
            _ => return Err(HaasError::config("mode", format!("unknown mode `{s}`"))),
        })
    }
}

/// Small ordered set of modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);
    pub const ALL: ModeSet = ModeSet(0b11111);

    pub fn single(m: CollaborationMode) -> Self {
        ModeSet(1 << m.index())
    }

    /// All modes with autonomy at or below `cap`.
    pub fn up_to(cap: CollaborationMode) -> Self {
        ModeSet((1u8 << (cap.index() + 1)) - 1)
    }

    pub fn contains(self, m: CollaborationMode) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn insert(&mut self, m: CollaborationMode) {
        self.0 |= 1 << m.index();
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = CollaborationMode> {
        CollaborationMode::ALL.into_iter().filter(move |m| self.contains(*m))
    }

    pub fn is_subset(self, other: ModeSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Feasible mode closest in autonomy to `target`; ties go to the lower mode.
    pub fn nearest(self, target: CollaborationMode) -> Option<CollaborationMode> {
        self.iter()
            .min_by_key(|m| ((m.index() as i32 - target.index() as i32).abs(), m.index()))
    }
}

impl FromIterator<CollaborationMode> for ModeSet {
    fn from_iter<I: IntoIterator<Item = CollaborationMode>>(iter: I) -> Self {
        let mut s = ModeSet::EMPTY;
        for m in iter {
            s.insert(m);
        }
        s
    }
}

impl Serialize for ModeSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<CollaborationMode> = Vec::deserialize(deserializer)?;
        Ok(v.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lead {
    Human,
    Ai,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationSpec {
    pub mode: CollaborationMode,
    pub sigma_h: f64,
    pub sigma_ai: f64,
    pub lead: Lead,
}

impl AllocationSpec {
    fn from_human_share(mode: CollaborationMode, sigma_h: f64) -> Self {
        AllocationSpec {
            mode,
            sigma_h,
            sigma_ai: 1.0 - sigma_h,
            lead: mode.lead(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShareBounds {
    /// Copilot AI share interval.
    pub copilot_ai: (f64, f64),
    /// Supervised human share interval.
    pub supervised_human: (f64, f64),
    pub peer_delta: f64,
    /// Fatigue above which Copilot shifts work to the AI.
    pub hybrid_trigger: f64,
}

impl Default for ShareBounds {
    fn default() -> Self {
        ShareBounds {
            copilot_ai: (0.20, 0.55),
            supervised_human: (0.10, 0.40),
            peer_delta: 0.20,
            hybrid_trigger: 0.35,
        }
    }
}

impl ShareBounds {
    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi;
        if !ok(self.copilot_ai) {
            return Err(HaasError::config("copilot_ai_bounds", "need 0 <= lower < upper <= 1"));
        }
        if !ok(self.supervised_human) {
            return Err(HaasError::config("supervised_human_bounds", "need 0 <= lower < upper <= 1"));
        }
        if !(0.0..=1.0).contains(&self.peer_delta) {
            return Err(HaasError::config("peer_delta", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.hybrid_trigger) {
            return Err(HaasError::config("hybrid_trigger", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

const COPILOT_FATIGUE_GAIN: f64 = 0.60;
const COPILOT_COMPLEXITY_GAIN: f64 = 0.20;
const SUPERVISED_JUDGMENT_GAIN: f64 = 0.35;
const SUPERVISED_FATIGUE_GAIN: f64 = 0.50;
const SUPERVISED_FATIGUE_KNEE: f64 = 0.65;

/// Copilot AI share: `clip(0.60·max(0, f − trigger) + 0.20·κ, lo, hi)`.
pub fn copilot_ai_share(profile: &CognitiveProfile, fatigue: f64, bounds: &ShareBounds) -> f64 {
    let excess = (fatigue - bounds.hybrid_trigger).max(0.0);
    let raw = COPILOT_FATIGUE_GAIN * excess + COPILOT_COMPLEXITY_GAIN * profile.complexity();
    raw.clamp(bounds.copilot_ai.0, bounds.copilot_ai.1)
}

/// Supervised human share: `clip(0.35·j − 0.50·max(0, f − 0.65), lo, hi)`.
pub fn supervised_human_share(profile: &CognitiveProfile, fatigue: f64, bounds: &ShareBounds) -> f64 {
    let excess = (fatigue - SUPERVISED_FATIGUE_KNEE).max(0.0);
    let raw = SUPERVISED_JUDGMENT_GAIN * profile.judgment_need() - SUPERVISED_FATIGUE_GAIN * excess;
    raw.clamp(bounds.supervised_human.0, bounds.supervised_human.1)
}

pub fn classify_mode(sigma_h: f64, bounds: &ShareBounds) -> CollaborationMode {
    if (sigma_h - 1.0).abs() <= SHARE_TOLERANCE {
        return CollaborationMode::HumanOnly;
    }
    if sigma_h.abs() <= SHARE_TOLERANCE {
        return CollaborationMode::Autonomous;
    }
    let sigma_ai = 1.0 - sigma_h;
    if (sigma_h - sigma_ai).abs() <= bounds.peer_delta + SHARE_TOLERANCE {
        CollaborationMode::Peer
    } else if sigma_h > 0.5 {
        CollaborationMode::Copilot
    } else {
        CollaborationMode::Supervised
    }
}

/// Whether the task card admits this mode.
pub fn mode_allowed(mode: CollaborationMode, constraint: Constraint) -> bool {
    match constraint {
        Constraint::None => true,
        Constraint::HumanOnly => mode == CollaborationMode::HumanOnly,
        Constraint::AiOnly => mode == CollaborationMode::Autonomous,
    }
}

/// Turns a selected mode into participation shares. The mode label is kept
/// even when the Copilot AI share exceeds one half.
pub fn instantiate_mode(
    mode: CollaborationMode,
    subtask: &Subtask,
    fatigue: f64,
    bounds: &ShareBounds,
) -> Result<AllocationSpec> {
    if !mode_allowed(mode, subtask.constraint) {
        return Err(HaasError::ConstraintConflict {
            mode,
            subtask: subtask.id.clone(),
            constraint: subtask.constraint.to_string(),
        });
    }
    Ok(match mode {
        CollaborationMode::HumanOnly => AllocationSpec::from_human_share(mode, 1.0),
        CollaborationMode::Autonomous => AllocationSpec::from_human_share(mode, 0.0),
        CollaborationMode::Peer => AllocationSpec::from_human_share(mode, 0.5),
        CollaborationMode::Copilot => {
            let ai = copilot_ai_share(&subtask.profile, fatigue, bounds);
            AllocationSpec {
                mode,
                sigma_h: 1.0 - ai,
                sigma_ai: ai,
                lead: Lead::Human,
            }
        }
        CollaborationMode::Supervised => {
            AllocationSpec::from_human_share(mode, supervised_human_share(&subtask.profile, fatigue, bounds))
        }
    })
}
