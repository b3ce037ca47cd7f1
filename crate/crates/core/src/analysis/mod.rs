//! Layerwise contribution analysis, layer-set integration and reporting.

mod contribution;
mod integration;
pub mod report;

pub use contribution::{
    contribution_from_set, layer_contribution, mean_norms, ContributionProfile, ContributionStore,
};
pub use integration::{integrate_layers, IntegrationOutcome, IntegrationSpec};
pub use report::{render_report, ReportSummary};
