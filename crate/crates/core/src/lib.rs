//! Human-AI collaboration simulator: task catalogues, collaboration modes,
//! governance, bandit allocators, human-state dynamics and outcome models.

pub mod catalog;
pub mod engine;
pub mod error;
pub mod humanstate;
pub mod learners;
pub mod library;
pub mod metrics;
pub mod modes;
pub mod outcomes;
pub mod params;
pub mod policy;
pub mod stats;

pub use catalog::{Domain, ScenarioSpec, Subtask};
pub use engine::{run, whatif_preview, Ablation, RunConfig, RunResult};
pub use error::{HaasError, Result};
pub use learners::{Algorithm, StrategyId};
pub use library::Library;
pub use modes::CollaborationMode;
pub use params::ModelParams;
pub use policy::Level;
