//! Versioned JSON persistence for trained models.
//!
//! Floats are written in shortest round-trip form, so `save -> load -> save`
//! reproduces the same bytes and reloaded models predict identically.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{ContextAgent, PerceptState, SystemParams};
use crate::engine::SystemState;
use crate::error::{Error, Result};
use crate::evaluation::LinearBaseline;
use crate::geometry::Hypercube;
use crate::learners::{LearnerConfig, OnlineLinearModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub label_name: String,
    /// Classes of the training data.
    pub classes: Vec<String>,
    pub normalization: Extrema,
    pub learner: LearnerConfig,
    pub provenance: Provenance,
    pub model: ModelBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub dataset_digest: String,
    pub cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Smapy {
        params: SystemParams,
        agents: Vec<AgentRecord>,
    },
    Linear {
        epochs: u32,
        weights: LinearWeights,
    },
}

/// Per-class coefficient rows (`p` weights then the bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWeights {
    pub classes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: u64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub confidence: f64,
    pub n_correct: u64,
    pub n_wrong: u64,
    pub weights: LinearWeights,
}

impl LinearWeights {
    fn of(model: &OnlineLinearModel) -> Self {
        LinearWeights {
            classes: model.classes().to_vec(),
            rows: model.weights().to_vec(),
            updates: model.updates(),
        }
    }

    fn to_model(&self, config: LearnerConfig, dim: usize) -> Result<OnlineLinearModel> {
        OnlineLinearModel::from_parts(config, dim, self.classes.clone(), self.rows.clone(), self.updates)
    }
}

/// Header fields shared by both model kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub feature_names: Vec<String>,
    pub label_name: String,
    pub classes: Vec<String>,
    pub provenance: Provenance,
}

/// A model ready to classify raw feature rows.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Smapy(SystemState),
    Linear(LinearBaseline),
}

impl LoadedModel {
    pub fn dim(&self) -> usize {
        match self {
            LoadedModel::Smapy(s) => s.dim(),
            LoadedModel::Linear(b) => b.model().dim(),
        }
    }

    pub fn predict(&self, raw: &[f64]) -> Result<String> {
        match self {
            LoadedModel::Smapy(s) => s.exploit(raw),
            LoadedModel::Linear(b) => b.predict(raw),
        }
    }
}

impl ModelFile {
    pub fn from_system(state: &SystemState, meta: ModelMeta) -> Self {
        let agents = state
            .agents()
            .iter()
            .map(|a| AgentRecord {
                id: a.id,
                lower: a.zone.lower().to_vec(),
                upper: a.zone.upper().to_vec(),
                confidence: a.confidence,
                n_correct: a.n_correct,
                n_wrong: a.n_wrong,
                weights: LinearWeights::of(&a.model),
            })
            .collect();
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            feature_names: meta.feature_names,
            label_name: meta.label_name,
            classes: meta.classes,
            normalization: Extrema {
                mins: state.percept().mins().to_vec(),
                maxs: state.percept().maxs().to_vec(),
            },
            learner: *state.learner(),
            provenance: meta.provenance,
            model: ModelBody::Smapy {
                params: *state.params(),
                agents,
            },
        }
    }

    pub fn from_baseline(baseline: &LinearBaseline, meta: ModelMeta) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            feature_names: meta.feature_names,
            label_name: meta.label_name,
            classes: meta.classes,
            normalization: Extrema {
                mins: baseline.percept().mins().to_vec(),
                maxs: baseline.percept().maxs().to_vec(),
            },
            learner: *baseline.model().config(),
            provenance: meta.provenance,
            model: ModelBody::Linear {
                epochs: baseline.epochs(),
                weights: LinearWeights::of(baseline.model()),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn to_model(&self) -> Result<LoadedModel> {
        let dim = self.dim();
        let percept = PerceptState::with_extrema(self.normalization.mins.clone(), self.normalization.maxs.clone())?;
        if percept.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: percept.dim(),
            });
        }
        match &self.model {
            ModelBody::Smapy { params, agents } => {
                let agents = agents
                    .iter()
                    .map(|r| {
                        let zone = Hypercube::new(r.lower.clone(), r.upper.clone())?;
                        let model = r.weights.to_model(self.learner, dim)?;
                        Ok(ContextAgent {
                            id: r.id,
                            zone,
                            confidence: r.confidence,
                            n_correct: r.n_correct,
                            n_wrong: r.n_wrong,
                            model,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(LoadedModel::Smapy(SystemState::from_parts(
                    *params,
                    self.learner,
                    percept,
                    agents,
                    self.provenance.cycles,
                )?))
            }
            ModelBody::Linear { epochs, weights } => Ok(LoadedModel::Linear(LinearBaseline::from_parts(
                percept,
                weights.to_model(self.learner, dim)?,
                *epochs,
            )?)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Data("model file lacks a format_version".into()))?;
        if version != u64::from(MODEL_FORMAT_VERSION) {
            return Err(Error::UnsupportedVersion(u32::try_from(version).unwrap_or(u32::MAX)));
        }
        Ok(serde_json::from_value(raw)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_json(&text)
    }
}
