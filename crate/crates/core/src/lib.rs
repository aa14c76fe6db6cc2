//! Cooperative context-learning classification.
//!
//! A population of Context agents tiles the normalized feature space with
//! hypercubes. Each agent carries an online linear classifier trained on the
//! points that activate it; agents expand, retract, push, absorb and exclude
//! points as they receive feedback, so a set of linear models ends up
//! approximating a nonlinear decision boundary.
//!
//! Modules:
//! * [`geometry`] hypercube algebra
//! * [`learners`] online one-versus-rest linear classifiers
//! * [`agents`] Percept, Context and Head agents
//! * [`engine`] the explore/exploit lifecycle
//! * [`evaluation`] cross-validation, grid search, boundary rasters
//! * [`model_file`] persistence
//! * [`cli`] the `smapy` command line

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod learners;
pub mod model_file;
pub mod rng;

pub use agents::{ContextAgent, PerceptState, ScoreNormalization, SystemParams};
pub use engine::{CycleRecord, CycleReport, SystemState, TrainingLog};
pub use error::{Error, Result};
pub use geometry::{Hypercube, Retraction};
pub use learners::{LearnerConfig, LearnerKind, LearnerSettings, OnlineLinearModel, Penalty};
pub use model_file::{LoadedModel, ModelFile};
