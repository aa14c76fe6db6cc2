//! Percept, Context and Head agents as plain state plus transition functions.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, ensure_finite, Error, Result};
use crate::geometry::{Hypercube, Retraction};
use crate::learners::OnlineLinearModel;

/// Running per-feature extrema used for min-max normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptState {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    /// When set, `observe` leaves the extrema untouched.
    frozen: bool,
}

impl PerceptState {
    pub fn new(dim: usize) -> Self {
        PerceptState {
            mins: vec![f64::INFINITY; dim],
            maxs: vec![f64::NEG_INFINITY; dim],
            frozen: false,
        }
    }

    /// Fixed extrema, e.g. from a pre-pass over a training set or a model file.
    pub fn with_extrema(mins: Vec<f64>, maxs: Vec<f64>) -> Result<Self> {
        ensure_dim(mins.len(), maxs.len())?;
        ensure_finite(&mins)?;
        ensure_finite(&maxs)?;
        if mins.iter().zip(&maxs).any(|(lo, hi)| lo > hi) {
            return Err(Error::Data("feature minimum exceeds maximum".into()));
        }
        Ok(PerceptState {
            mins,
            maxs,
            frozen: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    pub fn has_observations(&self) -> bool {
        self.mins.iter().all(|m| m.is_finite())
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn observe(&mut self, raw: &[f64]) -> Result<()> {
        ensure_dim(self.dim(), raw.len())?;
        ensure_finite(raw)?;
        if self.frozen {
            return Ok(());
        }
        for (j, &v) in raw.iter().enumerate() {
            self.mins[j] = self.mins[j].min(v);
            self.maxs[j] = self.maxs[j].max(v);
        }
        Ok(())
    }

    /// Map a raw observation into `[0, 1]^p`; zero-range axes map to 0.5.
    pub fn normalize(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if !self.has_observations() {
            return Err(Error::NoObservations);
        }
        ensure_dim(self.dim(), raw.len())?;
        ensure_finite(raw)?;
        Ok(raw
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.maxs[j] - self.mins[j];
                if range > 0.0 {
                    ((v - self.mins[j]) / range).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }

    /// Inverse of [`Self::normalize`] inside the recorded range.
    pub fn denormalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| self.mins[j] + v * (self.maxs[j] - self.mins[j]))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreNormalization {
    #[default]
    Sigmoid,
}

impl ScoreNormalization {
    pub fn apply(self, confidence: f64) -> f64 {
        match self {
            ScoreNormalization::Sigmoid => 1.0 / (1.0 + (-confidence).exp()),
        }
    }
}

/// External parameters of the agent population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Half-width of a newly created zone.
    pub r: f64,
    /// Overlap threshold above which competing agents merge.
    pub overlap: Option<f64>,
    /// Point exclusion on wrong proposals.
    pub exclusion: bool,
    pub normalization: ScoreNormalization,
    /// Expansion/retraction volume factor.
    pub alpha: f64,
    pub f_plus: f64,
    pub f_minus: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            r: 0.1,
            overlap: Some(0.5),
            exclusion: false,
            normalization: ScoreNormalization::Sigmoid,
            alpha: 0.1,
            f_plus: 1.0,
            f_minus: 1.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.r > 0.0) || !self.r.is_finite() {
            return fail(format!("R must be positive, got {}", self.r));
        }
        if let Some(o) = self.overlap {
            if !(o > 0.0 && o <= 1.0) {
                return fail(format!("O must lie in (0, 1], got {o}"));
            }
        }
        if !(0.0..1.0).contains(&self.alpha) {
            return fail(format!("alpha must lie in [0, 1), got {}", self.alpha));
        }
        if !(self.f_plus > 0.0) || !self.f_plus.is_finite() {
            return fail(format!("F+ must be positive, got {}", self.f_plus));
        }
        if !(self.f_minus > 0.0) || !self.f_minus.is_finite() {
            return fail(format!("F- must be positive, got {}", self.f_minus));
        }
        Ok(())
    }
}

/// A hypercube activation zone with its own confidence and local model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextAgent {
    pub id: u64,
    pub zone: Hypercube,
    pub confidence: f64,
    pub n_correct: u64,
    pub n_wrong: u64,
    pub model: OnlineLinearModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackOutcome {
    Kept,
    /// Point exclusion left no zone behind; the caller must drop the agent.
    Destroyed,
}

impl ContextAgent {
    pub fn new(id: u64, zone: Hypercube, model: OnlineLinearModel) -> Result<Self> {
        ensure_dim(zone.dim(), model.dim())?;
        Ok(ContextAgent {
            id,
            zone,
            confidence: 0.0,
            n_correct: 0,
            n_wrong: 0,
            model,
        })
    }

    pub fn score(&self, params: &SystemParams) -> f64 {
        params.normalization.apply(self.confidence)
    }

    pub fn propose(&self, x: &[f64]) -> Result<&str> {
        if !self.zone.contains(x)? {
            return Err(Error::PointOutside);
        }
        self.model.predict(x)
    }

    /// React to the Head's verdict on this agent's own proposal.
    pub fn apply_feedback(
        &mut self,
        x: &[f64],
        truth: &str,
        proposed: &str,
        params: &SystemParams,
    ) -> Result<FeedbackOutcome> {
        if proposed == truth {
            self.confidence += params.f_plus;
            self.n_correct += 1;
            self.zone = self.zone.scale(1.0 + params.alpha)?;
            self.model.partial_fit(x, truth)?;
            return Ok(FeedbackOutcome::Kept);
        }
        self.confidence -= params.f_minus;
        self.n_wrong += 1;
        if params.exclusion {
            return Ok(match self.zone.exclude_point(x)? {
                Retraction::Retracted(zone) => {
                    self.zone = zone;
                    FeedbackOutcome::Kept
                }
                Retraction::Destroyed => FeedbackOutcome::Destroyed,
            });
        }
        self.model.partial_fit(x, truth)?;
        self.zone = self.zone.scale(1.0 - params.alpha)?;
        Ok(FeedbackOutcome::Kept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<'a> {
    pub agent_id: u64,
    pub label: &'a str,
    pub score: f64,
}

/// Pick the label of the highest-scoring proposal.
///
/// Exact score ties are settled by majority vote among the tied proposals,
/// and vote ties by the lowest label.
pub fn head_select<'a>(proposals: &[Proposal<'a>]) -> Result<&'a str> {
    let best = proposals.iter().map(|p| p.score).fold(f64::NEG_INFINITY, f64::max);
    let mut votes: Vec<(&str, usize)> = Vec::new();
    for p in proposals.iter().filter(|p| p.score == best) {
        match votes.iter_mut().find(|(label, _)| *label == p.label) {
            Some((_, n)) => *n += 1,
            None => votes.push((p.label, 1)),
        }
    }
    votes
        .into_iter()
        .max_by(|(la, na), (lb, nb)| na.cmp(nb).then_with(|| lb.cmp(la)))
        .map(|(label, _)| label)
        .ok_or(Error::NoProposals)
}
