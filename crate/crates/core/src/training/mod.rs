//! Monte Carlo batches, Adam, and the fitting loop.

mod adam;
mod batch;
mod config;
mod fit;
mod history;
mod sequence;

pub use crate::nn::{LossBatch, LossBreakdown, LossWeights};
pub use adam::{adam_step, AdamState};
pub use batch::sample_batch;
pub use config::{Initialization, OnSurfaceBatch, TrainingConfig};
pub use fit::{fit, fit_normalized, FitOutcome};
pub use history::{loss_history_summary, ComponentSummary, HistorySummary};
pub use sequence::{PointCloudSequence, Scan};
