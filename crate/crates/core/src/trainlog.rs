//! Machine-readable training progress: one structured record per event,
//! serializable as JSON lines.

use serde::{Deserialize, Serialize};

use crate::error::{ChmError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TrainEvent {
    /// A bottom-up level is ready: either freshly trained or, for the first
    /// level of a later stage, reusing the previous stage's top-down output.
    LevelReady {
        class: usize,
        stage: usize,
        level: usize,
        trained: bool,
        samples: usize,
        log_loss: f64,
        f_value: f64,
        epoch_losses: Vec<f64>,
    },
    TopDownReady {
        class: usize,
        stage: usize,
        samples: usize,
        log_loss: f64,
        f_value: f64,
        epoch_losses: Vec<f64>,
    },
    /// Accounting summary: j1 is the sum of this stage's per-level training
    /// log-losses, j2 the top-down training log-loss.
    StageSummary {
        class: usize,
        stage: usize,
        j1: f64,
        j2: f64,
        train_f: f64,
    },
}

#[derive(Debug, Default, Clone)]
pub struct TrainLog {
    events: Vec<TrainEvent>,
}

impl TrainLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: TrainEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[TrainEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        for event in &self.events {
            let line = serde_json::to_string(event).map_err(|source| ChmError::Json {
                path: "<train log>".into(),
                source,
            })?;
            out.write_all(line.as_bytes())
                .and_then(|()| out.write_all(b"\n"))
                .map_err(|source| ChmError::io("<train log>", source))?;
        }
        Ok(())
    }
}
