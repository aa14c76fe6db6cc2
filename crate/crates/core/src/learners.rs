//! Online linear classifiers with a shared incremental-learning contract.
//!
//! All four kinds decompose multi-class problems one-versus-rest and fold the
//! intercept in as a constant feature equal to 1, so every class row holds
//! `p + 1` coefficients with the bias last.
//!
//! * `pa1` / `pa2`: passive-aggressive updates on the hinge loss.
//! * `logistic`: SGD on the log-loss.
//! * `linear_svm`: SGD on the hinge loss.
//!
//! The SGD learners use the inverse-scaling rate
//! `eta_t = eta0 / (1 + eta0 * alpha_reg * t)` with `eta0 = 1`. The `l1`
//! part of a penalty is applied as a proximal soft-threshold after the
//! gradient step, which yields exact zeros.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};

pub const INITIAL_LEARNING_RATE: f64 = 1.0;
pub const DEFAULT_L1_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    LinearSvm,
    Pa1,
    Pa2,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::Logistic,
        LearnerKind::LinearSvm,
        LearnerKind::Pa1,
        LearnerKind::Pa2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::LinearSvm => "linear_svm",
            LearnerKind::Pa1 => "pa1",
            LearnerKind::Pa2 => "pa2",
        }
    }

    pub fn is_passive_aggressive(self) -> bool {
        matches!(self, LearnerKind::Pa1 | LearnerKind::Pa2)
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LearnerKind::Logistic),
            "linear_svm" | "svm" => Ok(LearnerKind::LinearSvm),
            "pa1" => Ok(LearnerKind::Pa1),
            "pa2" => Ok(LearnerKind::Pa2),
            other => Err(Error::Config(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
    ElasticNet,
}

impl Penalty {
    pub fn name(self) -> &'static str {
        match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
            Penalty::ElasticNet => "elastic_net",
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Penalty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Penalty::L1),
            "l2" => Ok(Penalty::L2),
            "elastic_net" | "elasticnet" => Ok(Penalty::ElasticNet),
            other => Err(Error::Config(format!("unknown penalty `{other}`"))),
        }
    }
}

/// Validated learner hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerConfig {
    Logistic {
        alpha_reg: f64,
        penalty: Penalty,
        l1_ratio: f64,
    },
    LinearSvm {
        alpha_reg: f64,
        penalty: Penalty,
        l1_ratio: f64,
    },
    Pa1 {
        c: f64,
    },
    Pa2 {
        c: f64,
    },
}

/// Loosely-typed learner settings as they come from flags or files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnerSettings {
    pub kind: Option<LearnerKind>,
    pub alpha_reg: Option<f64>,
    pub penalty: Option<Penalty>,
    pub l1_ratio: Option<f64>,
    pub c: Option<f64>,
}

impl LearnerSettings {
    /// Reject fields that do not apply to the kind and fill defaults.
    pub fn validate(&self) -> Result<LearnerConfig> {
        let kind = self
            .kind
            .ok_or_else(|| Error::Config("learner kind is required".into()))?;
        if kind.is_passive_aggressive() {
            for (name, present) in [
                ("alpha_reg", self.alpha_reg.is_some()),
                ("penalty", self.penalty.is_some()),
                ("l1_ratio", self.l1_ratio.is_some()),
            ] {
                if present {
                    return Err(Error::Config(format!("`{name}` does not apply to {kind}")));
                }
            }
            let c = self.c.unwrap_or(1.0);
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Config(format!("C must be positive, got {c}")));
            }
            return Ok(if kind == LearnerKind::Pa1 {
                LearnerConfig::Pa1 { c }
            } else {
                LearnerConfig::Pa2 { c }
            });
        }
        if self.c.is_some() {
            return Err(Error::Config(format!("`c` does not apply to {kind}")));
        }
        let alpha_reg = self.alpha_reg.unwrap_or(1e-4);
        if !(alpha_reg > 0.0) || !alpha_reg.is_finite() {
            return Err(Error::Config(format!("alpha_reg must be positive, got {alpha_reg}")));
        }
        let penalty = self.penalty.unwrap_or(Penalty::L2);
        if self.l1_ratio.is_some() && penalty != Penalty::ElasticNet {
            return Err(Error::Config(
                "`l1_ratio` only applies to the elastic_net penalty".into(),
            ));
        }
        let l1_ratio = match penalty {
            Penalty::L1 => 1.0,
            Penalty::L2 => 0.0,
            Penalty::ElasticNet => self.l1_ratio.unwrap_or(DEFAULT_L1_RATIO),
        };
        if !(0.0..=1.0).contains(&l1_ratio) {
            return Err(Error::Config(format!("l1_ratio must lie in [0, 1], got {l1_ratio}")));
        }
        Ok(match kind {
            LearnerKind::Logistic => LearnerConfig::Logistic {
                alpha_reg,
                penalty,
                l1_ratio,
            },
            _ => LearnerConfig::LinearSvm {
                alpha_reg,
                penalty,
                l1_ratio,
            },
        })
    }
}

impl LearnerConfig {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerConfig::Logistic { .. } => LearnerKind::Logistic,
            LearnerConfig::LinearSvm { .. } => LearnerKind::LinearSvm,
            LearnerConfig::Pa1 { .. } => LearnerKind::Pa1,
            LearnerConfig::Pa2 { .. } => LearnerKind::Pa2,
        }
    }

    pub fn settings(&self) -> LearnerSettings {
        let kind = Some(self.kind());
        match *self {
            LearnerConfig::Logistic {
                alpha_reg,
                penalty,
                l1_ratio,
            }
            | LearnerConfig::LinearSvm {
                alpha_reg,
                penalty,
                l1_ratio,
            } => LearnerSettings {
                kind,
                alpha_reg: Some(alpha_reg),
                penalty: Some(penalty),
                l1_ratio: (penalty == Penalty::ElasticNet).then_some(l1_ratio),
                c: None,
            },
            LearnerConfig::Pa1 { c } | LearnerConfig::Pa2 { c } => LearnerSettings {
                kind,
                c: Some(c),
                ..Default::default()
            },
        }
    }
}

/// Log-loss `ln(1 + exp(-s (w . [x, 1])))` of one binary subproblem.
pub fn log_loss(row: &[f64], x: &[f64], sign: f64) -> f64 {
    softplus(-sign * affine(row, x))
}

/// Gradient of [`log_loss`] with respect to the `p + 1` row coefficients.
pub fn log_loss_gradient(row: &[f64], x: &[f64], sign: f64) -> Vec<f64> {
    let z = sign * affine(row, x);
    let g = -sign * sigmoid(-z);
    x.iter().copied().chain(std::iter::once(1.0)).map(|v| g * v).collect()
}

fn affine(row: &[f64], x: &[f64]) -> f64 {
    let p = x.len();
    row[..p].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + row[p]
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// One-versus-rest linear model updated one observation at a time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineLinearModel {
    config: LearnerConfig,
    dim: usize,
    /// Sorted class labels; row `i` of `weights` belongs to `classes[i]`.
    classes: Vec<String>,
    weights: Vec<Vec<f64>>,
    /// Number of `partial_fit` calls so far (the SGD step counter).
    updates: u64,
}

impl OnlineLinearModel {
    pub fn new<S: AsRef<str>>(config: LearnerConfig, dim: usize, classes: &[S]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("model dimension must be at least 1".into()));
        }
        if classes.is_empty() {
            return Err(Error::Config("at least one class is required".into()));
        }
        let mut sorted: Vec<String> = classes.iter().map(|c| c.as_ref().to_owned()).collect();
        sorted.sort();
        sorted.dedup();
        let weights = vec![vec![0.0; dim + 1]; sorted.len()];
        Ok(OnlineLinearModel {
            config,
            dim,
            classes: sorted,
            weights,
            updates: 0,
        })
    }

    /// Rebuild a model from stored coefficients.
    pub fn from_parts(
        config: LearnerConfig,
        dim: usize,
        classes: Vec<String>,
        weights: Vec<Vec<f64>>,
        updates: u64,
    ) -> Result<Self> {
        if classes.is_empty() || classes.len() != weights.len() {
            return Err(Error::Data("class list and weight rows disagree".into()));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Data("class list must be strictly sorted".into()));
        }
        for row in &weights {
            ensure_dim(dim + 1, row.len())?;
            ensure_finite(row)?;
        }
        Ok(OnlineLinearModel {
            config,
            dim,
            classes,
            weights,
            updates,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Coefficient rows (weights then bias), aligned with [`Self::classes`].
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim, x.len())?;
        Ok(self.weights.iter().map(|row| affine(row, x)).collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        let scores = self.decision_values(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(&self.classes[best])
    }

    fn class_index(&mut self, label: &str) -> usize {
        match self.classes.binary_search_by(|c| c.as_str().cmp(label)) {
            Ok(i) => i,
            Err(i) => {
                self.classes.insert(i, label.to_owned());
                self.weights.insert(i, vec![0.0; self.dim + 1]);
                i
            }
        }
    }

    pub fn partial_fit(&mut self, x: &[f64], label: &str) -> Result<()> {
        ensure_dim(self.dim, x.len())?;
        ensure_finite(x)?;
        let target = self.class_index(label);
        let sq_norm = x.iter().map(|v| v * v).sum::<f64>() + 1.0;
        let t = self.updates as f64;
        let config = self.config;
        for (i, row) in self.weights.iter_mut().enumerate() {
            let sign = if i == target { 1.0 } else { -1.0 };
            match config {
                LearnerConfig::Pa1 { c } => {
                    let loss = (1.0 - sign * affine(row, x)).max(0.0);
                    if loss > 0.0 {
                        passive_aggressive_step(row, x, sign, (loss / sq_norm).min(c));
                    }
                }
                LearnerConfig::Pa2 { c } => {
                    let loss = (1.0 - sign * affine(row, x)).max(0.0);
                    if loss > 0.0 {
                        let tau = loss / (sq_norm + 1.0 / (2.0 * c));
                        passive_aggressive_step(row, x, sign, tau);
                    }
                }
                LearnerConfig::Logistic {
                    alpha_reg, l1_ratio, ..
                } => {
                    let grad = log_loss_gradient(row, x, sign);
                    sgd_step(row, &grad, learning_rate(alpha_reg, t), alpha_reg, l1_ratio);
                }
                LearnerConfig::LinearSvm {
                    alpha_reg, l1_ratio, ..
                } => {
                    let margin = sign * affine(row, x);
                    let grad: Vec<f64> = if margin < 1.0 {
                        x.iter()
                            .copied()
                            .chain(std::iter::once(1.0))
                            .map(|v| -sign * v)
                            .collect()
                    } else {
                        vec![0.0; x.len() + 1]
                    };
                    sgd_step(row, &grad, learning_rate(alpha_reg, t), alpha_reg, l1_ratio);
                }
            }
        }
        self.updates += 1;
        if self.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }
}

pub fn learning_rate(alpha_reg: f64, t: f64) -> f64 {
    INITIAL_LEARNING_RATE / (1.0 + INITIAL_LEARNING_RATE * alpha_reg * t)
}

fn passive_aggressive_step(row: &mut [f64], x: &[f64], sign: f64, tau: f64) {
    let p = x.len();
    for (w, v) in row[..p].iter_mut().zip(x) {
        *w += tau * sign * v;
    }
    row[p] += tau * sign;
}

// The bias (last coefficient) is never penalized.
fn sgd_step(row: &mut [f64], grad: &[f64], eta: f64, alpha_reg: f64, l1_ratio: f64) {
    let p = row.len() - 1;
    let ridge = alpha_reg * (1.0 - l1_ratio);
    let threshold = eta * alpha_reg * l1_ratio;
    for j in 0..p {
        let w = row[j] - eta * (grad[j] + ridge * row[j]);
        row[j] = if threshold > 0.0 {
            w.signum() * (w.abs() - threshold).max(0.0)
        } else {
            w
        };
    }
    row[p] -= eta * grad[p];
}
