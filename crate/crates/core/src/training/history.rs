use crate::nn::LossBreakdown;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub min: f64,
    pub final_value: f64,
    pub epoch_of_min: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistorySummary {
    pub epochs: usize,
    pub data_abs: ComponentSummary,
    pub eikonal_data: ComponentSummary,
    pub temporal_data: ComponentSummary,
    pub eikonal_reg: ComponentSummary,
    pub temporal_reg: ComponentSummary,
    pub total: ComponentSummary,
}

fn summarize(values: impl Iterator<Item = f64>) -> ComponentSummary {
    let mut out = ComponentSummary { min: f64::INFINITY, final_value: f64::NAN, epoch_of_min: 0 };
    for (epoch, v) in values.enumerate() {
        if v < out.min {
            out.min = v;
            out.epoch_of_min = epoch;
        }
        out.final_value = v;
    }
    out
}

/// Minimum, final value and epoch of the minimum for each loss component.
pub fn loss_history_summary(history: &[LossBreakdown]) -> Result<HistorySummary> {
    if history.is_empty() {
        return Err(Error::InvalidTraining("loss history is empty".into()));
    }
    let column = |k: usize| summarize(history.iter().map(move |l| l.components()[k]));
    Ok(HistorySummary {
        epochs: history.len(),
        data_abs: column(0),
        eikonal_data: column(1),
        temporal_data: column(2),
        eikonal_reg: column(3),
        temporal_reg: column(4),
        total: column(5),
    })
}
