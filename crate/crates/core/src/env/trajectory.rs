use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

/// One agent step, as written to trajectory files.
///
/// `t` is the time at which the action was applied (start of the control
/// interval); the plasma scalars describe the state at the end of it and
/// are absent when the step terminated the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: usize,
    pub t: f64,
    pub requested: Vec<f64>,
    pub applied: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub clipped: bool,
    pub ramp_limited: bool,
    pub n_substeps: usize,
    pub j0: Option<f64>,
    pub q_min: Option<f64>,
    pub q95: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "Q")]
    pub q_fusion_gain: Option<f64>,
    #[serde(rename = "H98")]
    pub h98: Option<f64>,
}

/// Receives a record after every environment step.
pub trait TrajectorySink: Send {
    fn record(&mut self, record: &TrajectoryRecord);
}

impl TrajectorySink for Vec<TrajectoryRecord> {
    fn record(&mut self, record: &TrajectoryRecord) {
        self.push(record.clone());
    }
}

/// Shared in-memory sink; clones observe the same buffer.
#[derive(Debug, Clone, Default)]
pub struct RecordBuffer(Arc<Mutex<Vec<TrajectoryRecord>>>);

impl RecordBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn take(&self) -> Vec<TrajectoryRecord> {
        std::mem::take(&mut *self.0.lock().expect("record buffer poisoned"))
    }

    pub fn len(&self) -> usize {
        self.0.lock().expect("record buffer poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl TrajectorySink for RecordBuffer {
    fn record(&mut self, record: &TrajectoryRecord) {
        self.0.lock().expect("record buffer poisoned").push(record.clone());
    }
}
