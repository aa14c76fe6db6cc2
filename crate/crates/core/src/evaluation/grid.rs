use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agents::{ScoreNormalization, SystemParams};
use crate::engine::SystemState;
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, LearnerKind, LearnerSettings};
use crate::rng::{self, Purpose};

use super::cv::{accuracy, confusion, stratified_kfold, LinearBaseline};
use super::Dataset;

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_STANDALONE_EPOCHS: u32 = 5;
/// Internal models of agents see each training point once.
pub const AGENT_EPOCHS: u32 = 1;

const MODEL_KEYS: [&str; 4] = ["alpha_reg", "penalty", "l1_ratio", "c"];
const SYSTEM_KEYS: [&str; 7] = [
    "r",
    "overlap",
    "exclusion",
    "normalization",
    "alpha",
    "f_plus",
    "f_minus",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Standalone learners over the model grid.
    Linear,
    /// Agent systems over the system grid, learner frozen.
    Mas,
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Stage::Linear),
            "mas" => Ok(Stage::Mas),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Linear => "linear",
            Stage::Mas => "mas",
        })
    }
}

/// Named candidate lists; combinations enumerate with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    axes: Vec<(String, Vec<Value>)>,
}

impl GridSpec {
    fn build(allowed: &[&str], axes: Vec<(String, Vec<Value>)>) -> Result<Self> {
        for (name, values) in &axes {
            if !allowed.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown grid key `{name}`")));
            }
            if values.is_empty() {
                return Err(Error::Config(format!("grid key `{name}` has no values")));
            }
        }
        let mut ordered = Vec::with_capacity(axes.len());
        for key in allowed {
            let mut matching = axes.iter().filter(|(n, _)| n == key);
            if let Some(axis) = matching.next() {
                if matching.next().is_some() {
                    return Err(Error::Config(format!("grid key `{key}` given twice")));
                }
                ordered.push(axis.clone());
            }
        }
        Ok(GridSpec { axes: ordered })
    }

    pub fn model(axes: Vec<(String, Vec<Value>)>) -> Result<Self> {
        GridSpec::build(&MODEL_KEYS, axes)
    }

    pub fn system(axes: Vec<(String, Vec<Value>)>) -> Result<Self> {
        GridSpec::build(&SYSTEM_KEYS, axes)
    }

    /// Model grid from a table such as `{ alpha_reg = [0.001], penalty = ["l2"] }`.
    pub fn model_from_map(map: &Map<String, Value>) -> Result<Self> {
        GridSpec::model(axes_from_map(map)?)
    }

    pub fn system_from_map(map: &Map<String, Value>) -> Result<Self> {
        GridSpec::system(axes_from_map(map)?)
    }

    /// Default model grid for a learner kind.
    pub fn default_model(kind: LearnerKind) -> Self {
        let axes = if kind.is_passive_aggressive() {
            vec![("c".into(), nums(&[0.5, 1.0, 2.0]))]
        } else {
            vec![
                ("alpha_reg".into(), nums(&[0.0001, 0.001, 0.01])),
                ("penalty".into(), strs(&["l1", "l2", "elastic_net"])),
            ]
        };
        GridSpec { axes }
    }

    /// Default system grid (3 x 2 x 2 x 1 x 3 x 1 x 3 = 108 combinations).
    pub fn default_system() -> Self {
        GridSpec {
            axes: vec![
                ("r".into(), nums(&[0.1, 0.2, 0.5])),
                ("overlap".into(), nums(&[0.2, 0.5])),
                ("exclusion".into(), vec![Value::Bool(false), Value::Bool(true)]),
                ("normalization".into(), strs(&["sigmoid"])),
                ("alpha".into(), nums(&[0.0, 0.1, 0.2])),
                ("f_plus".into(), nums(&[1.0])),
                ("f_minus".into(), nums(&[0.5, 1.0, 2.0])),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn combinations(&self) -> Vec<Map<String, Value>> {
        let mut out = vec![Map::new()];
        for (name, values) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|partial| {
                    values.iter().map(move |v| {
                        let mut m = partial.clone();
                        m.insert(name.clone(), v.clone());
                        m
                    })
                })
                .collect();
        }
        out
    }
}

fn nums(v: &[f64]) -> Vec<Value> {
    v.iter().map(|&x| Value::from(x)).collect()
}

fn strs(v: &[&str]) -> Vec<Value> {
    v.iter().map(|&s| Value::from(s)).collect()
}

fn axes_from_map(map: &Map<String, Value>) -> Result<Vec<(String, Vec<Value>)>> {
    map.iter()
        .map(|(k, v)| match v {
            Value::Array(values) => Ok((k.clone(), values.clone())),
            scalar => Ok((k.clone(), vec![scalar.clone()])),
        })
        .collect()
}

fn as_f64(name: &str, v: &Value) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::Config(format!("`{name}` expects a number, got {v}")))
}

fn as_str<'a>(name: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| Error::Config(format!("`{name}` expects a string, got {v}")))
}

/// Learner config for one model-grid combination.
pub fn learner_from_params(kind: LearnerKind, params: &Map<String, Value>) -> Result<LearnerConfig> {
    let mut s = LearnerSettings {
        kind: Some(kind),
        ..Default::default()
    };
    for (name, v) in params {
        match name.as_str() {
            "alpha_reg" => s.alpha_reg = Some(as_f64(name, v)?),
            "penalty" => s.penalty = Some(as_str(name, v)?.parse()?),
            "l1_ratio" => s.l1_ratio = Some(as_f64(name, v)?),
            "c" => s.c = Some(as_f64(name, v)?),
            other => return Err(Error::Config(format!("unknown model parameter `{other}`"))),
        }
    }
    s.validate()
}

/// System parameters for one system-grid combination, starting from `base`.
pub fn system_from_params(base: SystemParams, params: &Map<String, Value>) -> Result<SystemParams> {
    let mut p = base;
    for (name, v) in params {
        match name.as_str() {
            "r" => p.r = as_f64(name, v)?,
            "overlap" => {
                p.overlap = match v {
                    Value::Null => None,
                    Value::String(s) if s == "none" => None,
                    other => Some(as_f64(name, other)?),
                }
            }
            "exclusion" => {
                p.exclusion = v
                    .as_bool()
                    .ok_or_else(|| Error::Config(format!("`exclusion` expects a boolean, got {v}")))?
            }
            "normalization" => {
                p.normalization = match as_str(name, v)? {
                    "sigmoid" => ScoreNormalization::Sigmoid,
                    other => return Err(Error::Config(format!("unknown normalization `{other}`"))),
                }
            }
            "alpha" => p.alpha = as_f64(name, v)?,
            "f_plus" => p.f_plus = as_f64(name, v)?,
            "f_minus" => p.f_minus = as_f64(name, v)?,
            other => return Err(Error::Config(format!("unknown system parameter `{other}`"))),
        }
    }
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct GridSearch {
    pub stage: Stage,
    pub learner: LearnerKind,
    pub model_grid: GridSpec,
    pub system_grid: GridSpec,
    /// Learner frozen during the `mas` stage.
    pub fixed_model: Option<LearnerConfig>,
    pub k: usize,
    pub seed: u64,
    pub standalone_epochs: u32,
}

impl GridSearch {
    pub fn new(stage: Stage, learner: LearnerKind) -> Self {
        GridSearch {
            stage,
            learner,
            model_grid: GridSpec::default_model(learner),
            system_grid: GridSpec::default_system(),
            fixed_model: None,
            k: DEFAULT_FOLDS,
            seed: 0,
            standalone_epochs: DEFAULT_STANDALONE_EPOCHS,
        }
    }

    /// Evaluate every combination over the same folds. Combinations run on the
    /// current rayon pool; the report does not depend on its size.
    pub fn run(&self, data: &Dataset) -> Result<EvalReport> {
        let classes = data.classes();
        if classes.len() < 2 {
            return Err(Error::Data("evaluation needs at least two classes".into()));
        }
        let folds = stratified_kfold(&data.labels, self.k, self.seed)?;

        enum Job {
            Linear(LearnerConfig),
            Mas(LearnerConfig, SystemParams),
        }
        let (grid, jobs): (&GridSpec, Vec<Job>) = match self.stage {
            Stage::Linear => (
                &self.model_grid,
                self.model_grid
                    .combinations()
                    .iter()
                    .map(|c| learner_from_params(self.learner, c).map(Job::Linear))
                    .collect::<Result<_>>()?,
            ),
            Stage::Mas => {
                let fixed = self
                    .fixed_model
                    .ok_or_else(|| Error::Config("the mas stage needs fixed model parameters".into()))?;
                if fixed.kind() != self.learner {
                    return Err(Error::Config(format!(
                        "fixed model is {} but the search targets {}",
                        fixed.kind(),
                        self.learner
                    )));
                }
                (
                    &self.system_grid,
                    self.system_grid
                        .combinations()
                        .iter()
                        .map(|c| system_from_params(SystemParams::default(), c).map(|p| Job::Mas(fixed, p)))
                        .collect::<Result<_>>()?,
                )
            }
        };
        let combos = grid.combinations();

        let rows = jobs
            .par_iter()
            .zip(combos.par_iter())
            .map(|(job, params)| {
                let started = Instant::now();
                let mut fold_accuracies = Vec::with_capacity(folds.len());
                let mut confusions = Vec::with_capacity(folds.len());
                for (f, fold) in folds.iter().enumerate() {
                    let fold_seed = rng::derive_seed(self.seed, Purpose::FoldTraining, f as u32);
                    let (train_x, train_y) = data.subset(&fold.train);
                    let (test_x, test_y) = data.subset(&fold.test);
                    let predicted: Vec<String> = match job {
                        Job::Linear(cfg) => {
                            let model =
                                LinearBaseline::fit(*cfg, &train_x, &train_y, self.standalone_epochs, fold_seed)?;
                            test_x.iter().map(|x| model.predict(x)).collect::<Result<_>>()?
                        }
                        Job::Mas(cfg, sys) => {
                            let mut state = SystemState::new(*sys, *cfg, data.dim())?;
                            state.fit(&train_x, &train_y, fold_seed)?;
                            test_x.iter().map(|x| state.exploit(x)).collect::<Result<_>>()?
                        }
                    };
                    fold_accuracies.push(accuracy(&test_y, &predicted)?);
                    confusions.push(confusion(&classes, &test_y, &predicted));
                }
                let (learner, system) = match job {
                    Job::Linear(cfg) => (*cfg, None),
                    Job::Mas(cfg, sys) => (*cfg, Some(*sys)),
                };
                let (mean, std) = mean_std(&fold_accuracies);
                Ok(ComboResult {
                    params: params.clone(),
                    learner,
                    system,
                    fold_accuracies,
                    mean_accuracy: mean,
                    std_accuracy: std,
                    confusion: confusions,
                    wall_ms: started.elapsed().as_secs_f64() * 1e3,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut best = 0;
        for (i, r) in rows.iter().enumerate() {
            if r.mean_accuracy > rows[best].mean_accuracy {
                best = i;
            }
        }
        Ok(EvalReport {
            format_version: REPORT_VERSION,
            stage: self.stage,
            learner: self.learner,
            k: self.k,
            seed: self.seed,
            standalone_epochs: self.standalone_epochs,
            agent_epochs: AGENT_EPOCHS,
            stratified: true,
            fixed_model: match self.stage {
                Stage::Linear => None,
                Stage::Mas => self.fixed_model,
            },
            dataset_digest: data.digest(),
            n_rows: data.len(),
            classes,
            best,
            rows,
        })
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboResult {
    pub params: Map<String, Value>,
    pub learner: LearnerConfig,
    pub system: Option<SystemParams>,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    /// One confusion matrix per fold, rows = truth, columns = prediction.
    pub confusion: Vec<Vec<Vec<u64>>>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub stage: Stage,
    pub learner: LearnerKind,
    pub k: usize,
    pub seed: u64,
    pub standalone_epochs: u32,
    pub agent_epochs: u32,
    pub stratified: bool,
    pub fixed_model: Option<LearnerConfig>,
    pub dataset_digest: String,
    pub n_rows: usize,
    pub classes: Vec<String>,
    /// Index into `rows` of the highest mean accuracy (first on ties).
    pub best: usize,
    pub rows: Vec<ComboResult>,
}

impl EvalReport {
    pub fn best_row(&self) -> &ComboResult {
        &self.rows[self.best]
    }

    /// The same report with wall-clock figures zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.wall_ms = 0.0;
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(text)?;
        if report.format_version != REPORT_VERSION {
            return Err(Error::UnsupportedVersion(report.format_version));
        }
        if report.best >= report.rows.len() {
            return Err(Error::Data("report best index out of range".into()));
        }
        Ok(report)
    }

    /// Human-readable table, best row marked with `*`.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "stage={} learner={} k={} seed={} standalone_epochs={} agent_epochs={} rows={}",
            self.stage,
            self.learner,
            self.k,
            self.seed,
            self.standalone_epochs,
            self.agent_epochs,
            self.rows.len()
        );
        for (i, r) in self.rows.iter().enumerate() {
            let mark = if i == self.best { '*' } else { ' ' };
            let params: Vec<String> = r.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                out,
                "{mark} {:>4} mean={:.4} std={:.4} {}",
                i,
                r.mean_accuracy,
                r.std_accuracy,
                params.join(" ")
            );
        }
        out
    }
}
