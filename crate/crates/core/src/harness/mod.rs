//! Campaign configuration, seeded sample streams, pilot, estimation and
//! MSE campaigns, and the artifact formats used by the command-line tool.

mod campaign;
mod config;
pub mod io;
mod stream;

pub use campaign::{
    default_snapshot_steps, Campaign, EstimateReport, MseRow, ValidationResult,
};
pub use config::{
    Budgets, CampaignConfig, CaseConfig, CostModel, KernelConfig, Selection, CONFIG_VERSION,
};
pub use stream::{SampleStream, StreamTag};
